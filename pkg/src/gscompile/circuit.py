"""Decode solved models into executable timed circuits and export them.

A timed circuit is the final pipeline artifact: Hadamards and CNOTs with
exact start/end times on physical qubits, canceled gates removed, direction
booleans resolved into control/target order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from .device import DeviceCalibration
from .errors import SolutionError, ValidationError
from .graphs import GraphSpec, graph_from_edges
from .model import SchedModel, Solution
from .placement import Embedding


@dataclass(frozen=True)
class TimedGate:
    kind: str  # "h" | "cx"
    wires: Tuple[int, ...]  # (qubit,) or (control, target)
    start: Fraction
    end: Fraction


@dataclass(frozen=True)
class TimedCircuit:
    n: int
    placement: Tuple[int, ...]  # vertex -> physical qubit
    gates: Tuple[TimedGate, ...]  # sorted by (start, insertion order)
    makespan: Fraction
    graph: GraphSpec

    def vertex_of(self) -> Dict[int, int]:
        return {q: v for v, q in enumerate(self.placement)}


def _validate_wires(gates: Sequence[TimedGate]) -> None:
    by_wire: Dict[int, List[TimedGate]] = {}
    for g in gates:
        if g.end <= g.start:
            raise SolutionError(f"gate {g} has a non-positive window")
        for q in g.wires:
            by_wire.setdefault(q, []).append(g)
    for q, lst in by_wire.items():
        lst = sorted(lst, key=lambda g: g.start)
        for a, b in zip(lst, lst[1:]):
            if a.end > b.start:
                raise SolutionError(f"overlapping gates on qubit {q}: {a} / {b}")


def derive_circuit(m: SchedModel, s: Solution) -> TimedCircuit:
    """Linear-time decode: drop canceled pairs, resolve directions, sort.

    Assumes check_solution(m, s) is empty; additionally verifies that the
    canceled Hadamards form adjacent same-wire pairs (prep+pre, or post+pre
    of consecutive same-target CNOTs), which the model variables alone do not
    guarantee.
    """
    v = s.vars
    control, target = {}, {}
    for i, (pa, pb, _, _) in enumerate(m.cnot_info):
        control[i], target[i] = (pa, pb) if v.C[i] else (pb, pa)

    # Logical per-wire sequences for pair-parity validation.
    cnots_by_wire: Dict[int, List[int]] = {q: [] for q in m.mapped_qubits}
    for i in sorted(range(m.num_cnots), key=lambda i: (v.S[i], i)):
        cnots_by_wire[control[i]].append(i)
        cnots_by_wire[target[i]].append(i)
    for vertex in range(m.graph.n):
        q = m.prep_wire(vertex)
        seq: List[Tuple[str, int]] = [("prep", m.prep_id(vertex))]
        for i in cnots_by_wire[q]:
            if target[i] == q:
                seq.extend([("pre", m.pre_id(i)), ("cnot", i), ("post", m.post_id(i))])
            else:
                seq.append(("cnot", i))
        k = 0
        while k < len(seq):
            kind, gid = seq[k]
            if kind != "cnot" and v.B[gid]:
                ok = (
                    k + 1 < len(seq)
                    and kind in ("prep", "post")
                    and seq[k + 1][0] == "pre"
                    and v.B[seq[k + 1][1]]
                )
                if not ok:
                    raise SolutionError(
                        f"canceled Hadamard {gid} on qubit {q} has no adjacent canceled partner"
                    )
                k += 2
            else:
                k += 1

    timed: List[TimedGate] = []
    for gate in m.gates:
        if gate.kind == "h" and v.B[gate.id]:
            continue
        if gate.kind == "cnot":
            wires = (control[gate.id], target[gate.id])
            kind = "cx"
        else:
            origin, _, arg = gate.origin.partition(":")
            if origin == "prep":
                wires = (m.prep_wire(int(arg)),)
            else:
                wires = (target[int(arg)],)
            kind = "h"
        timed.append(TimedGate(kind, wires, Fraction(v.S[gate.id]), Fraction(v.T[gate.id])))
    timed.sort(key=lambda g: (g.start, g.wires))
    _validate_wires(timed)
    makespan = max(g.end for g in timed)
    return TimedCircuit(
        n=m.graph.n,
        placement=tuple(m.embedding.mapping),
        gates=tuple(timed),
        makespan=makespan,
        graph=m.graph,
    )


def naive_circuit(g: GraphSpec, e: Embedding, cal: DeviceCalibration) -> TimedCircuit:
    """Baseline: parallel prep layer, then fully serialized CZ blocks.

    No cancellation, edges in sorted order, control fixed to the edge's first
    vertex. Serves as the uncompiled comparison point.
    """
    gates: List[TimedGate] = []
    prep_end = Fraction(0)
    for v in range(g.n):
        q = e.mapping[v]
        d = Fraction(cal.qubit(q).sq_duration_ns)
        gates.append(TimedGate("h", (q,), Fraction(0), d))
        prep_end = max(prep_end, d)
    cur = prep_end
    for u, v in g.sorted_edges():
        ctrl, tgt = e.mapping[u], e.mapping[v]
        coupler = cal.coupler(ctrl, tgt)
        d2 = Fraction(coupler.duration_ab_ns if coupler.a == ctrl else coupler.duration_ba_ns)
        dh = Fraction(cal.qubit(tgt).sq_duration_ns)
        gates.append(TimedGate("h", (tgt,), cur, cur + dh))
        gates.append(TimedGate("cx", (ctrl, tgt), cur + dh, cur + dh + d2))
        gates.append(TimedGate("h", (tgt,), cur + dh + d2, cur + 2 * dh + d2))
        cur = cur + 2 * dh + d2
    gates.sort(key=lambda tg: (tg.start, tg.wires))
    _validate_wires(gates)
    return TimedCircuit(
        n=g.n,
        placement=tuple(e.mapping),
        gates=tuple(gates),
        makespan=max(tg.end for tg in gates),
        graph=g,
    )


def _as_int_ns(x: Fraction, what: str) -> int:
    if Fraction(x).denominator != 1:
        raise ValidationError(f"{what} is not an integer nanosecond value: {x}")
    return int(x)


def circuit_to_json(c: TimedCircuit) -> dict:
    return {
        "n": c.n,
        "placement": list(c.placement),
        "makespan_ns": _as_int_ns(c.makespan, "makespan"),
        "gates": [
            {
                "kind": g.kind,
                "wires": list(g.wires),
                "start_ns": _as_int_ns(g.start, "gate start"),
                "end_ns": _as_int_ns(g.end, "gate end"),
            }
            for g in c.gates
        ],
    }


def circuit_from_json(data: dict) -> TimedCircuit:
    if set(data) != {"n", "placement", "makespan_ns", "gates"}:
        raise ValidationError("circuit file must have keys n, placement, makespan_ns, gates")
    placement = tuple(int(q) for q in data["placement"])
    inverse = {q: v for v, q in enumerate(placement)}
    gates = tuple(
        TimedGate(
            str(g["kind"]),
            tuple(int(w) for w in g["wires"]),
            Fraction(int(g["start_ns"])),
            Fraction(int(g["end_ns"])),
        )
        for g in data["gates"]
    )
    edges = set()
    for g in gates:
        if g.kind == "cx":
            u, v = inverse[g.wires[0]], inverse[g.wires[1]]
            edges.add((min(u, v), max(u, v)))
    graph = graph_from_edges(int(data["n"]), edges)
    return TimedCircuit(
        n=int(data["n"]),
        placement=placement,
        gates=gates,
        makespan=Fraction(int(data["makespan_ns"])),
        graph=graph,
    )


def export_circuit(c: TimedCircuit, format: str = "json") -> str:
    """Render a circuit as canonical JSON or a qasm-like listing with delays."""
    if format == "json":
        return json.dumps(circuit_to_json(c), indent=2) + "\n"
    if format != "qasm-like":
        raise ValidationError(f"unknown circuit format {format!r}")
    lines = [f"// graph-state preparation circuit, makespan {_as_int_ns(c.makespan, 'makespan')} ns"]
    # Each gate's start is encoded as a delay on one wire: its only wire for
    # Hadamards, the control wire for CNOTs (the target wire's clock is not
    # advanced by a CNOT, so its own gates carry the full gap).
    elapsed: Dict[int, Fraction] = {}
    for g in c.gates:
        q = g.wires[0]
        gap = g.start - elapsed.get(q, Fraction(0))
        if gap > 0:
            lines.append(f"delay({_as_int_ns(gap, 'delay')}) q[{q}];")
        elapsed[q] = g.end
        if g.kind == "h":
            lines.append(f"h q[{q}];")
        else:
            lines.append(f"cx q[{g.wires[0]}], q[{g.wires[1]}];")
    return "\n".join(lines) + "\n"


def load_circuit(path) -> TimedCircuit:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed circuit file {path}: {exc}") from exc
    return circuit_from_json(data)
