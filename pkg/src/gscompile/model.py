"""Formal scheduling model for graph-state preparation circuits.

Variables per gate: CNOT direction booleans C, rational start/end times S/T,
and Hadamard cancellation booleans B. Constraints tie durations to the chosen
direction, order non-commuting gates, keep each wire exclusive, and pin down
when a Hadamard may be marked canceled (window containment in a same-target
CNOT plus pairing with an adjacent canceled partner).

Every constraint is materialized as a small expression tree that is both
evaluated exactly (check_solution) and serialized to SMT-LIB (emit_smtlib),
so the built-in solver and an external optimizing solver see the same model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .device import DeviceCalibration, topology_graph
from .errors import ExternalSolverError, ValidationError
from .graphs import GraphSpec
from .placement import Embedding

Number = Union[int, Fraction]


# ---------------------------------------------------------------------------
# Expression trees

def _smt_num(x: Number) -> str:
    f = Fraction(x)
    if f.denominator == 1:
        v = f.numerator
        return f"{v}.0" if v >= 0 else f"(- {-v}.0)"
    num, den = f.numerator, f.denominator
    core = f"(/ {abs(num)}.0 {den}.0)"
    return core if num >= 0 else f"(- {core})"


class Expr:
    def eval(self, env: Dict[str, object]):
        raise NotImplementedError

    def smt(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class RVar(Expr):
    name: str

    def eval(self, env):
        return env[self.name]

    def smt(self):
        return self.name


@dataclass(frozen=True)
class RConst(Expr):
    value: Fraction

    def eval(self, env):
        return self.value

    def smt(self):
        return _smt_num(self.value)


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr

    def eval(self, env):
        return self.a.eval(env) - self.b.eval(env)

    def smt(self):
        return f"(- {self.a.smt()} {self.b.smt()})"


@dataclass(frozen=True)
class Le(Expr):
    a: Expr
    b: Expr

    def eval(self, env):
        return self.a.eval(env) <= self.b.eval(env)

    def smt(self):
        return f"(<= {self.a.smt()} {self.b.smt()})"


@dataclass(frozen=True)
class EqR(Expr):
    a: Expr
    b: Expr

    def eval(self, env):
        return self.a.eval(env) == self.b.eval(env)

    def smt(self):
        return f"(= {self.a.smt()} {self.b.smt()})"


@dataclass(frozen=True)
class BVar(Expr):
    name: str

    def eval(self, env):
        return env[self.name]

    def smt(self):
        return self.name


@dataclass(frozen=True)
class BConst(Expr):
    value: bool

    def eval(self, env):
        return self.value

    def smt(self):
        return "true" if self.value else "false"


TRUE = BConst(True)
FALSE = BConst(False)


@dataclass(frozen=True)
class Not(Expr):
    a: Expr

    def eval(self, env):
        return not self.a.eval(env)

    def smt(self):
        return f"(not {self.a.smt()})"


def _flat(args: Sequence[Expr], drop: Expr, short: Expr) -> Optional[List[Expr]]:
    out = []
    for a in args:
        if a == short:
            return None
        if a != drop:
            out.append(a)
    return out


@dataclass(frozen=True)
class And(Expr):
    args: Tuple[Expr, ...]

    def eval(self, env):
        return all(a.eval(env) for a in self.args)

    def smt(self):
        if not self.args:
            return "true"
        if len(self.args) == 1:
            return self.args[0].smt()
        return "(and " + " ".join(a.smt() for a in self.args) + ")"


@dataclass(frozen=True)
class Or(Expr):
    args: Tuple[Expr, ...]

    def eval(self, env):
        return any(a.eval(env) for a in self.args)

    def smt(self):
        if not self.args:
            return "false"
        if len(self.args) == 1:
            return self.args[0].smt()
        return "(or " + " ".join(a.smt() for a in self.args) + ")"


def conj(*args: Expr) -> Expr:
    flat = _flat(args, TRUE, FALSE)
    if flat is None:
        return FALSE
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*args: Expr) -> Expr:
    flat = _flat(args, FALSE, TRUE)
    if flat is None:
        return TRUE
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


@dataclass(frozen=True)
class Implies(Expr):
    a: Expr
    b: Expr

    def eval(self, env):
        return (not self.a.eval(env)) or self.b.eval(env)

    def smt(self):
        return f"(=> {self.a.smt()} {self.b.smt()})"


def implies(a: Expr, b: Expr) -> Expr:
    if a == FALSE or b == TRUE:
        return TRUE
    if a == TRUE:
        return b
    return Implies(a, b)


# ---------------------------------------------------------------------------
# Model types

class ObjectiveKind(Enum):
    MAX_CANCELLATION = "cancellation"
    MIN_MAKESPAN = "runtime"
    MAX_REMAINING_COHERENCE = "decoherence"
    SMT_RUNTIME = "smt-runtime"  # lexicographic: cancellation first, then makespan


@dataclass(frozen=True)
class Objective:
    kind: ObjectiveKind
    crosstalk_free: bool = False


@dataclass(frozen=True)
class GateId:
    """One scheduled gate.

    For CNOTs, ``qubits`` is the placed coupler's (a, b) endpoint pair; the
    direction boolean C picks the control (True: control = a). For sandwich
    Hadamards (origin pre:/post:), ``qubits`` holds the wire under C = True;
    the effective wire tracks the resolved direction.
    """

    kind: str  # "cnot" | "h"
    id: int
    qubits: Tuple[int, ...]
    origin: str  # "edge:i", "prep:v", "pre:i", "post:i"


@dataclass
class ModelVars:
    C: Dict[int, bool]
    S: Dict[int, Fraction]
    T: Dict[int, Fraction]
    B: Dict[int, bool]


@dataclass
class Solution:
    vars: ModelVars
    objective_value: object  # Fraction/int, or tuple for lexicographic objectives
    proven_optimal: bool


@dataclass
class SchedModel:
    """Materialized model instance for one (graph, embedding, calibration)."""

    graph: GraphSpec
    embedding: Embedding
    objective: Objective
    gates: List[GateId]
    # Per-CNOT: (phys_a, phys_b, dur_control_a, dur_control_b)
    cnot_info: List[Tuple[int, int, int, int]]
    sq_dur: Dict[int, int]  # physical qubit -> Hadamard duration (ns)
    coherence_ns: Dict[int, Fraction]  # mapped physical qubit -> D_q (ns)
    mapped_qubits: List[int]
    crosstalk_pairs: List[Tuple[int, int]]  # CNOT index pairs under Eq.-11-style exclusion
    constraints: List[Tuple[str, Expr]] = field(default_factory=list)

    @property
    def num_cnots(self) -> int:
        return len(self.cnot_info)

    def cnot_id(self, i: int) -> int:
        return i

    def prep_id(self, v: int) -> int:
        return self.num_cnots + v

    def pre_id(self, i: int) -> int:
        return self.num_cnots + self.graph.n + 2 * i

    def post_id(self, i: int) -> int:
        return self.num_cnots + self.graph.n + 2 * i + 1

    def prep_wire(self, v: int) -> int:
        return self.embedding.mapping[v]

    def hadamard_ids(self) -> List[int]:
        return [g.id for g in self.gates if g.kind == "h"]


def _S(gid: int) -> RVar:
    return RVar(f"S_{gid}")


def _T(gid: int) -> RVar:
    return RVar(f"T_{gid}")


def _C(i: int) -> BVar:
    return BVar(f"C_{i}")


def _B(gid: int) -> BVar:
    return BVar(f"B_{gid}")


def _const(v: Number) -> RConst:
    return RConst(Fraction(v))


# ---------------------------------------------------------------------------
# Model construction

def build_model(
    g: GraphSpec,
    e: Embedding,
    cal: DeviceCalibration,
    obj: Objective,
) -> SchedModel:
    """Materialize gates, variables, and all constraints for one instance."""
    topo = topology_graph(cal)
    edges = g.sorted_edges()
    for u, v in edges:
        pu, pv = e.mapping[u], e.mapping[v]
        if pv not in topo.get(pu, frozenset()):
            raise ValidationError(f"embedding maps edge ({u},{v}) onto non-coupled qubits ({pu},{pv})")
    if len(set(e.mapping)) != g.n or len(e.mapping) != g.n:
        raise ValidationError("embedding is not an injective map of all vertices")

    cnot_info = []
    for u, v in edges:
        c = cal.coupler(e.mapping[u], e.mapping[v])
        cnot_info.append((c.a, c.b, c.duration_ab_ns, c.duration_ba_ns))

    mapped = list(e.mapping)
    sq_dur = {q: cal.qubit(q).sq_duration_ns for q in mapped}
    coherence = {q: Fraction(cal.qubit(q).coherence_time_us) * 1000 for q in mapped}

    m_cnots = len(edges)
    gates: List[GateId] = []
    for i, (u, v) in enumerate(edges):
        pa, pb, _, _ = cnot_info[i]
        gates.append(GateId("cnot", i, (pa, pb), f"edge:{u}-{v}"))
    for v in range(g.n):
        gates.append(GateId("h", m_cnots + v, (e.mapping[v],), f"prep:{v}"))
    for i in range(m_cnots):
        pb = cnot_info[i][1]
        gates.append(GateId("h", m_cnots + g.n + 2 * i, (pb,), f"pre:{i}"))
        gates.append(GateId("h", m_cnots + g.n + 2 * i + 1, (pb,), f"post:{i}"))

    crosstalk_pairs: List[Tuple[int, int]] = []
    if obj.crosstalk_free:
        for i in range(m_cnots):
            for j in range(i + 1, m_cnots):
                qi = set(cnot_info[i][:2])
                qj = set(cnot_info[j][:2])
                if qi & qj:
                    continue
                if any(b in topo[a] for a in qi for b in qj):
                    crosstalk_pairs.append((i, j))

    model = SchedModel(
        graph=g,
        embedding=e,
        objective=obj,
        gates=gates,
        cnot_info=cnot_info,
        sq_dur=sq_dur,
        coherence_ns=coherence,
        mapped_qubits=mapped,
        crosstalk_pairs=crosstalk_pairs,
    )
    model.constraints = _build_constraints(model)
    return model


def _targets(m: SchedModel, i: int, q: int) -> Expr:
    """Boolean condition: CNOT i targets physical qubit q."""
    pa, pb, _, _ = m.cnot_info[i]
    if q == pb:
        return _C(i)
    if q == pa:
        return Not(_C(i))
    return FALSE


def _onwire(m: SchedModel, gate: GateId, q: int) -> Expr:
    if gate.kind == "cnot":
        return TRUE if q in gate.qubits else FALSE
    origin, _, arg = gate.origin.partition(":")
    if origin == "prep":
        return TRUE if m.prep_wire(int(arg)) == q else FALSE
    return _targets(m, int(arg), q)


def _not_canceled(gate: GateId) -> Expr:
    return Not(_B(gate.id)) if gate.kind == "h" else TRUE


def _nonoverlap(a: int, b: int) -> Expr:
    return disj(Le(_T(a), _S(b)), Le(_T(b), _S(a)))


def _none_before(m: SchedModel, q: int, j: int) -> Expr:
    """No non-canceled gate on wire q lies entirely before CNOT j starts."""
    terms = []
    for gate in m.gates:
        if gate.kind == "cnot" and gate.id == j:
            continue
        terms.append(
            Not(conj(_onwire(m, gate, q), _not_canceled(gate), Le(_T(gate.id), _S(j))))
        )
    return conj(*terms)


def _none_between(m: SchedModel, q: int, j1: int, j2: int) -> Expr:
    """No non-canceled gate on wire q lies inside the gap between CNOTs j1, j2."""
    terms = []
    for gate in m.gates:
        if gate.kind == "cnot" and gate.id in (j1, j2):
            continue
        terms.append(
            Not(
                conj(
                    _onwire(m, gate, q),
                    _not_canceled(gate),
                    Le(_T(j1), _S(gate.id)),
                    Le(_T(gate.id), _S(j2)),
                )
            )
        )
    return conj(*terms)


def _build_constraints(m: SchedModel) -> List[Tuple[str, Expr]]:
    cons: List[Tuple[str, Expr]] = []
    g = m.graph
    mc = m.num_cnots

    # Domain: non-negative start times.
    for gate in m.gates:
        cons.append((f"domain[{gate.id}]", Le(_const(0), _S(gate.id))))

    # constr-a: duration linkage, conditional on direction.
    for i, (pa, pb, dab, dba) in enumerate(m.cnot_info):
        span = Sub(_T(i), _S(i))
        cons.append(
            (
                f"constr-a[cnot {i}]",
                conj(
                    implies(_C(i), EqR(span, _const(dab))),
                    implies(Not(_C(i)), EqR(span, _const(dba))),
                ),
            )
        )
        for hid in (m.pre_id(i), m.post_id(i)):
            span_h = Sub(_T(hid), _S(hid))
            cons.append(
                (
                    f"constr-a[h {hid}]",
                    conj(
                        implies(_C(i), EqR(span_h, _const(m.sq_dur[pb]))),
                        implies(Not(_C(i)), EqR(span_h, _const(m.sq_dur[pa]))),
                    ),
                )
            )
    for v in range(g.n):
        pid = m.prep_id(v)
        cons.append(
            (
                f"constr-a[h {pid}]",
                EqR(Sub(_T(pid), _S(pid)), _const(m.sq_dur[m.prep_wire(v)])),
            )
        )

    # constr-b / constr-c: sandwich ordering, waived for canceled Hadamards.
    for i in range(mc):
        cons.append(
            (f"constr-b[{i}]", implies(Not(_B(m.pre_id(i))), Le(_T(m.pre_id(i)), _S(i))))
        )
        cons.append(
            (f"constr-c[{i}]", implies(Not(_B(m.post_id(i))), Le(_T(i), _S(m.post_id(i)))))
        )

    # prep-first: the initial |+> preparation precedes everything on its wire.
    for v in range(g.n):
        pid = m.prep_id(v)
        q = m.prep_wire(v)
        for gate in m.gates:
            if gate.id == pid:
                continue
            cond = conj(Not(_B(pid)), _not_canceled(gate), _onwire(m, gate, q))
            if cond == FALSE:
                continue
            cons.append((f"prep-first[{pid},{gate.id}]", implies(cond, Le(_T(pid), _S(gate.id)))))

    # constr-d: disjunctive non-overlap for CNOTs sharing a same-role qubit.
    for i in range(mc):
        for j in range(i + 1, mc):
            shared = set(m.cnot_info[i][:2]) & set(m.cnot_info[j][:2])
            for q in sorted(shared):
                ti, tj = _targets(m, i, q), _targets(m, j, q)
                same_role = disj(conj(ti, tj), conj(Not(ti), Not(tj)))
                cons.append((f"constr-d[{i},{j}]", implies(same_role, _nonoverlap(i, j))))

    # constr-e: a CNOT controlling q must stay clear of the whole Hadamard
    # sandwich of a CNOT targeting q.
    for i in range(mc):
        for j in range(mc):
            if i == j:
                continue
            shared = set(m.cnot_info[i][:2]) & set(m.cnot_info[j][:2])
            for q in sorted(shared):
                cond = conj(Not(_targets(m, i, q)), _targets(m, j, q))
                if cond == FALSE:
                    continue
                pre_j, post_j = m.pre_id(j), m.post_id(j)
                before = disj(
                    conj(Not(_B(pre_j)), Le(_T(i), _S(pre_j))),
                    conj(_B(pre_j), Le(_T(i), _S(j))),
                )
                after = disj(
                    conj(Not(_B(post_j)), Le(_T(post_j), _S(i))),
                    conj(_B(post_j), Le(_T(j), _S(i))),
                )
                cons.append((f"constr-e[{i},{j}]", implies(cond, disj(before, after))))

    # wire-excl: non-canceled gates sharing a wire never overlap. PREP pairs
    # are already ordered by prep-first; sandwich pairs of one CNOT by b/c.
    hs = [gate for gate in m.gates if gate.kind == "h" and not gate.origin.startswith("prep")]
    cnots = [gate for gate in m.gates if gate.kind == "cnot"]
    for a_idx in range(len(hs)):
        ga = hs[a_idx]
        i = int(ga.origin.partition(":")[2])
        for gb in hs[a_idx + 1:]:
            j = int(gb.origin.partition(":")[2])
            if i == j:
                continue
            shared = set(m.cnot_info[i][:2]) & set(m.cnot_info[j][:2])
            for q in sorted(shared):
                cond = conj(
                    _onwire(m, ga, q), _onwire(m, gb, q), Not(_B(ga.id)), Not(_B(gb.id))
                )
                if cond == FALSE:
                    continue
                cons.append((f"wire-excl[{ga.id},{gb.id},{q}]", implies(cond, _nonoverlap(ga.id, gb.id))))
        for gb in cnots:
            j = gb.id
            if i == j:
                continue
            shared = set(m.cnot_info[i][:2]) & set(m.cnot_info[j][:2])
            for q in sorted(shared):
                cond = conj(_onwire(m, ga, q), Not(_B(ga.id)))
                if q not in gb.qubits or cond == FALSE:
                    continue
                cons.append((f"wire-excl[{ga.id},{gb.id},{q}]", implies(cond, _nonoverlap(ga.id, gb.id))))

    # constr-f: a canceled Hadamard's window is contained in the window of a
    # CNOT targeting the same wire.
    for gate in m.gates:
        if gate.kind != "h":
            continue
        hid = gate.id
        origin, _, arg = gate.origin.partition(":")
        witnesses = []
        for j in range(mc):
            if origin == "prep":
                q = m.prep_wire(int(arg))
                wire_cond = _targets(m, j, q)
            else:
                i = int(arg)
                shared = set(m.cnot_info[i][:2]) & set(m.cnot_info[j][:2])
                wire_cond = disj(
                    *(conj(_targets(m, i, q), _targets(m, j, q)) for q in sorted(shared))
                )
            witnesses.append(conj(wire_cond, Le(_S(j), _S(hid)), Le(_T(hid), _T(j))))
        cons.append((f"constr-f[{hid}]", implies(_B(hid), disj(*witnesses))))

    # pair-*: canceled Hadamards must pair up adjacently on their wire:
    # PREP with the PRE of the wire's first targeting CNOT, or POST(f) with
    # PRE(f') for consecutive targeting CNOTs.
    prep_by_wire = {m.prep_wire(v): m.prep_id(v) for v in range(g.n)}
    for v in range(g.n):
        pid = m.prep_id(v)
        q = m.prep_wire(v)
        options = [
            conj(_targets(m, j, q), _B(m.pre_id(j)), _none_before(m, q, j))
            for j in range(mc)
        ]
        cons.append((f"pair-prep[{pid}]", implies(_B(pid), disj(*options))))
    for i in range(mc):
        pre_opts = []
        for q in sorted(set(m.cnot_info[i][:2])):
            if q in prep_by_wire:
                pre_opts.append(
                    conj(_targets(m, i, q), _B(prep_by_wire[q]), _none_before(m, q, i))
                )
        post_opts = []
        for j in range(mc):
            if j == i:
                continue
            shared = set(m.cnot_info[i][:2]) & set(m.cnot_info[j][:2])
            for q in sorted(shared):
                pre_opts.append(
                    conj(
                        _targets(m, i, q),
                        _targets(m, j, q),
                        _B(m.post_id(j)),
                        Le(_T(j), _S(i)),
                        _none_between(m, q, j, i),
                    )
                )
                post_opts.append(
                    conj(
                        _targets(m, i, q),
                        _targets(m, j, q),
                        _B(m.pre_id(j)),
                        Le(_T(i), _S(j)),
                        _none_between(m, q, i, j),
                    )
                )
        cons.append((f"pair-pre[{i}]", implies(_B(m.pre_id(i)), disj(*pre_opts))))
        cons.append((f"pair-post[{i}]", implies(_B(m.post_id(i)), disj(*post_opts))))

    # Optional crosstalk exclusion between adjacent two-qubit gates.
    for i, j in m.crosstalk_pairs:
        cons.append((f"crosstalk[{i},{j}]", _nonoverlap(i, j)))

    return cons


# ---------------------------------------------------------------------------
# Solution checking and objective evaluation

def _env_of(m: SchedModel, vars: ModelVars) -> Dict[str, object]:
    env: Dict[str, object] = {}
    for i in range(m.num_cnots):
        env[f"C_{i}"] = vars.C[i]
    for gate in m.gates:
        env[f"S_{gate.id}"] = Fraction(vars.S[gate.id])
        env[f"T_{gate.id}"] = Fraction(vars.T[gate.id])
        if gate.kind == "h":
            env[f"B_{gate.id}"] = vars.B[gate.id]
    return env


def check_solution(m: SchedModel, s: Solution) -> List[str]:
    """Labels of all constraints violated by the solution's assignment."""
    env = _env_of(m, s.vars)
    return [label for label, expr in m.constraints if not expr.eval(env)]


def resolved_wires(m: SchedModel, gate: GateId, c_bits: Dict[int, bool]) -> Tuple[int, ...]:
    """Physical wires of a gate once directions are fixed."""
    if gate.kind == "cnot":
        return gate.qubits
    origin, _, arg = gate.origin.partition(":")
    if origin == "prep":
        return (m.prep_wire(int(arg)),)
    i = int(arg)
    pa, pb, _, _ = m.cnot_info[i]
    return (pb if c_bits[i] else pa,)


def canceled_count(m: SchedModel, vars: ModelVars) -> int:
    return sum(1 for h in m.hadamard_ids() if vars.B[h])


def makespan_of(m: SchedModel, vars: ModelVars) -> Fraction:
    return max(Fraction(vars.T[gate.id]) for gate in m.gates)


def remaining_coherence_of(m: SchedModel, vars: ModelVars) -> Fraction:
    """min over mapped qubits of D_q minus the last gate end on that wire."""
    last: Dict[int, Fraction] = {q: Fraction(0) for q in m.mapped_qubits}
    for gate in m.gates:
        for q in resolved_wires(m, gate, vars.C):
            t = Fraction(vars.T[gate.id])
            if t > last[q]:
                last[q] = t
    return min(m.coherence_ns[q] - last[q] for q in m.mapped_qubits)


def objective_value_of(m: SchedModel, vars: ModelVars):
    kind = m.objective.kind
    if kind is ObjectiveKind.MAX_CANCELLATION:
        return canceled_count(m, vars)
    if kind is ObjectiveKind.MIN_MAKESPAN:
        return makespan_of(m, vars)
    if kind is ObjectiveKind.MAX_REMAINING_COHERENCE:
        return remaining_coherence_of(m, vars)
    return (canceled_count(m, vars), makespan_of(m, vars))


# ---------------------------------------------------------------------------
# SMT-LIB emission

def emit_smtlib(m: SchedModel) -> str:
    """Complete SMT-LIB 2 optimization problem; byte-deterministic."""
    lines: List[str] = []
    lines.append("; graph-state preparation scheduling model")
    lines.append(f"; gates={len(m.gates)} cnots={m.num_cnots} objective={m.objective.kind.value}")
    lines.append("(set-option :produce-models true)")
    if m.objective.kind is ObjectiveKind.SMT_RUNTIME:
        lines.append("(set-option :opt.priority lex)")
    lines.append("(set-logic QF_LRA)")
    for gate in m.gates:
        lines.append(f"(declare-fun S_{gate.id} () Real)")
        lines.append(f"(declare-fun T_{gate.id} () Real)")
    for i in range(m.num_cnots):
        lines.append(f"(declare-fun C_{i} () Bool)")
    for hid in m.hadamard_ids():
        lines.append(f"(declare-fun B_{hid} () Bool)")

    for label, expr in m.constraints:
        lines.append(f"; {label}")
        lines.append(f"(assert {expr.smt()})")

    kind = m.objective.kind
    need_makespan = kind in (ObjectiveKind.MIN_MAKESPAN, ObjectiveKind.SMT_RUNTIME)
    if need_makespan:
        lines.append("(declare-fun MAKESPAN () Real)")
        for gate in m.gates:
            lines.append(f"(assert (>= MAKESPAN T_{gate.id}))")
    if kind is ObjectiveKind.MAX_REMAINING_COHERENCE:
        lines.append("(declare-fun M_REM () Real)")
        for q in m.mapped_qubits:
            lines.append(f"(declare-fun TQ_{q} () Real)")
            lines.append(f"(assert (>= TQ_{q} 0.0))")
            for gate in m.gates:
                cond = _onwire(m, gate, q)
                if cond == FALSE:
                    continue
                body = f"(>= TQ_{q} T_{gate.id})"
                if cond == TRUE:
                    lines.append(f"(assert {body})")
                else:
                    lines.append(f"(assert (=> {cond.smt()} {body}))")
            dq = _smt_num(m.coherence_ns[q])
            lines.append(f"(assert (<= M_REM (- {dq} TQ_{q})))")

    cancel_sum = "(+ " + " ".join(f"(ite B_{h} 1.0 0.0)" for h in m.hadamard_ids()) + ")"
    if kind is ObjectiveKind.MAX_CANCELLATION:
        lines.append(f"(maximize {cancel_sum})")
    elif kind is ObjectiveKind.MIN_MAKESPAN:
        lines.append("(minimize MAKESPAN)")
    elif kind is ObjectiveKind.MAX_REMAINING_COHERENCE:
        lines.append("(maximize M_REM)")
    else:
        lines.append(f"(maximize {cancel_sum})")
        lines.append("(minimize MAKESPAN)")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    lines.append("(get-objectives)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# External solver output parsing

def _tokenize(text: str) -> List[str]:
    out: List[str] = []
    tok = []
    for ch in text:
        if ch in "()":
            if tok:
                out.append("".join(tok))
                tok = []
            out.append(ch)
        elif ch.isspace():
            if tok:
                out.append("".join(tok))
                tok = []
        else:
            tok.append(ch)
    if tok:
        out.append("".join(tok))
    return out


def _parse_sexprs(tokens: List[str]):
    pos = 0

    def parse():
        nonlocal pos
        if tokens[pos] == "(":
            pos += 1
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(parse())
            if pos >= len(tokens):
                raise ExternalSolverError("unbalanced parentheses in solver output")
            pos += 1
            return items
        atom = tokens[pos]
        pos += 1
        return atom

    exprs = []
    while pos < len(tokens):
        exprs.append(parse())
    return exprs


def _value_of(sexpr) -> object:
    if isinstance(sexpr, str):
        if sexpr == "true":
            return True
        if sexpr == "false":
            return False
        return Fraction(sexpr)
    if sexpr and sexpr[0] == "-" and len(sexpr) == 2:
        return -_value_of(sexpr[1])
    if sexpr and sexpr[0] == "/" and len(sexpr) == 3:
        return _value_of(sexpr[1]) / _value_of(sexpr[2])
    raise ExternalSolverError(f"cannot interpret solver value {sexpr!r}")


def parse_external_solution(m: SchedModel, solver_output: str) -> Solution:
    """Decode an optimizing SMT solver's model listing into a Solution.

    Expects a leading sat/unsat/unknown verdict followed by a model with one
    define-fun per declared variable.
    """
    stripped = [ln.strip() for ln in solver_output.splitlines() if ln.strip()]
    if not stripped:
        raise ExternalSolverError("empty solver output")
    verdict = stripped[0]
    if verdict == "unsat":
        raise ExternalSolverError("solver reported unsat")
    if verdict not in ("sat", "unknown"):
        raise ExternalSolverError(f"unrecognized solver verdict {verdict!r}")

    body = "\n".join(stripped[1:])
    bindings: Dict[str, object] = {}
    for item in _parse_sexprs(_tokenize(body)):
        stack = [item]
        while stack:
            node = stack.pop()
            if isinstance(node, list):
                if len(node) >= 5 and node[0] == "define-fun":
                    name = node[1]
                    bindings[name] = _value_of(node[-1])
                else:
                    stack.extend(x for x in node if isinstance(x, list))

    vars = ModelVars(C={}, S={}, T={}, B={})
    for i in range(m.num_cnots):
        key = f"C_{i}"
        if key not in bindings:
            raise ExternalSolverError(f"solver output is missing variable {key}")
        vars.C[i] = bool(bindings[key])
    for gate in m.gates:
        for prefix, store in (("S", vars.S), ("T", vars.T)):
            key = f"{prefix}_{gate.id}"
            if key not in bindings:
                raise ExternalSolverError(f"solver output is missing variable {key}")
            store[gate.id] = Fraction(bindings[key])
        if gate.kind == "h":
            key = f"B_{gate.id}"
            if key not in bindings:
                raise ExternalSolverError(f"solver output is missing variable {key}")
            vars.B[gate.id] = bool(bindings[key])

    return Solution(
        vars=vars,
        objective_value=objective_value_of(m, vars),
        proven_optimal=(verdict == "sat"),
    )
