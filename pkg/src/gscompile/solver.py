"""Exact branch-and-bound scheduler for the preparation model.

Search space: every CNOT direction assignment times every commutation class
of CZ-block orders (represented by edge sequences; adjacent independent edges
are canonicalized to ascending order so each class is visited once). At a
leaf the schedule is fixed: Hadamard pairs that sit adjacently on a wire are
canceled greedily (always optimal: removing gates never hurts any objective)
and the remaining gates are placed as soon as possible along their wires.

Bounds are admissible critical-path relaxations: per-wire ready time plus the
CNOT durations still owed to that wire, assuming every future sandwich
Hadamard cancels.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import CapExceededError
from .model import (
    ModelVars,
    Objective,
    ObjectiveKind,
    SchedModel,
    Solution,
)

DEFAULT_EXACT_CAP = 10


def _direction_tables(m: SchedModel, mask: int):
    """Per-CNOT (control, target, duration) plus per-wire cancellation data."""
    control, target, dur = [], [], []
    for i, (pa, pb, dab, dba) in enumerate(m.cnot_info):
        if (mask >> i) & 1:
            control.append(pa)
            target.append(pb)
            dur.append(dab)
        else:
            control.append(pb)
            target.append(pa)
            dur.append(dba)
    max_target_dur: Dict[int, int] = {q: 0 for q in m.mapped_qubits}
    for i in range(m.num_cnots):
        if dur[i] > max_target_dur[target[i]]:
            max_target_dur[target[i]] = dur[i]
    cancelable = {q: m.sq_dur[q] <= max_target_dur[q] for q in m.mapped_qubits}
    return control, target, dur, cancelable


def evaluate_order(
    m: SchedModel,
    mask: int,
    perm: Tuple[int, ...],
    record: bool = False,
):
    """ASAP-schedule one (direction, order) leaf.

    Returns (canceled, makespan, wire_end) and, when recording, the per-gate
    windows and canceled-gate set needed to build a full variable assignment.
    """
    control, target, dur, cancelable = _direction_tables(m, mask)
    sq = m.sq_dur
    ready: Dict[int, int] = {q: 0 for q in m.mapped_qubits}
    # pending[q]: lazily scheduled Hadamard that the next targeting CNOT may
    # cancel; ("prep", gate_id) or ("post", gate_id).
    pending: Dict[int, Optional[Tuple[str, int]]] = {
        m.prep_wire(v): ("prep", m.prep_id(v)) for v in range(m.graph.n)
    }
    canceled = 0
    canceled_ids = set()
    windows: Dict[int, Tuple[int, int]] = {}
    cnot_end: Dict[int, int] = {}

    def flush(q: int) -> None:
        item = pending[q]
        if item is None:
            return
        pending[q] = None
        start = ready[q]
        ready[q] = start + sq[q]
        if record:
            windows[item[1]] = (start, ready[q])

    for i in perm:
        c, t, d = control[i], target[i], dur[i]
        # Sandwich PRE on the target wire, possibly canceling the pending H.
        pre = m.pre_id(i)
        if pending[t] is not None and cancelable[t]:
            canceled += 2
            if record:
                canceled_ids.add(pending[t][1])
                canceled_ids.add(pre)
            pending[t] = None
        else:
            flush(t)
            start = ready[t]
            ready[t] = start + sq[t]
            if record:
                windows[pre] = (start, ready[t])
        flush(c)
        start = max(ready[c], ready[t])
        if m.crosstalk_pairs:
            for a, b in m.crosstalk_pairs:
                other = b if a == i else (a if b == i else None)
                if other is not None and other in cnot_end and cnot_end[other] > start:
                    start = cnot_end[other]
        end = start + d
        ready[c] = ready[t] = end
        cnot_end[i] = end
        if record:
            windows[i] = (start, end)
        pending[t] = ("post", m.post_id(i))

    for q in m.mapped_qubits:
        flush(q)

    makespan = max(ready.values())
    if record:
        return canceled, makespan, dict(ready), windows, canceled_ids
    return canceled, makespan, ready


class _Search:
    """Branch-and-bound over (direction mask, edge order) for one objective.

    mode: "cancel" (maximize), "makespan" (minimize), "coherence" (maximize).
    require_canceled pins the cancellation count (lexicographic stage two).
    """

    def __init__(self, m: SchedModel, mode: str, require_canceled: Optional[int] = None):
        self.m = m
        self.mode = mode
        self.require_canceled = require_canceled
        self.best_key = None
        self.best_leaf: Optional[Tuple[int, Tuple[int, ...]]] = None
        # Edge independence for canonical ordering: dependent if wires shared
        # or a crosstalk constraint links them.
        mc = m.num_cnots
        self.dependent = [[False] * mc for _ in range(mc)]
        for i in range(mc):
            for j in range(mc):
                if i != j and set(m.cnot_info[i][:2]) & set(m.cnot_info[j][:2]):
                    self.dependent[i][j] = True
        for i, j in m.crosstalk_pairs:
            self.dependent[i][j] = self.dependent[j][i] = True
        self.wire_edges: Dict[int, List[int]] = {q: [] for q in m.mapped_qubits}
        for i, (pa, pb, _, _) in enumerate(m.cnot_info):
            self.wire_edges[pa].append(i)
            self.wire_edges[pb].append(i)

    def run(self) -> Tuple[object, int, Tuple[int, ...]]:
        m = self.m
        for mask in range(1 << m.num_cnots):
            self._search_mask(mask)
        assert self.best_leaf is not None, "model is always satisfiable"
        mask, perm = self.best_leaf
        return self._value_from_key(self.best_key), mask, perm

    # Keys are "smaller is better" tuples.
    def _leaf_key(self, canceled: int, makespan: int, wire_end: Dict[int, int]):
        if self.mode == "cancel":
            return -canceled
        if self.mode == "makespan":
            return makespan
        m_rem = min(self.m.coherence_ns[q] - wire_end[q] for q in self.m.mapped_qubits)
        return -m_rem

    def _value_from_key(self, key):
        return -key if self.mode in ("cancel", "coherence") else key

    def _search_mask(self, mask: int) -> None:
        m = self.m
        control, target, dur, cancelable = _direction_tables(m, mask)
        sq = m.sq_dur
        remaining_load = {q: 0 for q in m.mapped_qubits}
        for i in range(m.num_cnots):
            remaining_load[control[i]] += dur[i]
            remaining_load[target[i]] += dur[i]

        ready = {q: 0 for q in m.mapped_qubits}
        pending = {m.prep_wire(v): ("prep", m.prep_id(v)) for v in range(m.graph.n)}
        cnot_end: Dict[int, int] = {}
        all_edges = list(range(m.num_cnots))

        def prune(canceled: int, cur_makespan: int, n_left: int) -> bool:
            if self.require_canceled is not None and canceled + 2 * n_left < self.require_canceled:
                return True
            if self.best_key is None:
                return False
            if self.mode == "cancel":
                return -(canceled + 2 * n_left) >= self.best_key
            if self.mode == "makespan":
                lb = cur_makespan
                for q in m.mapped_qubits:
                    est = ready[q] + remaining_load[q]
                    if est > lb:
                        lb = est
                return lb >= self.best_key
            ub = min(
                m.coherence_ns[q] - (ready[q] + remaining_load[q])
                for q in m.mapped_qubits
            )
            return -ub >= self.best_key

        def dfs(placed: List[int], canceled: int, cur_makespan: int, left: List[int]) -> None:
            if not left:
                if self.require_canceled is not None and canceled != self.require_canceled:
                    return
                wire_end = dict(ready)
                end_max = cur_makespan
                for q in m.mapped_qubits:
                    if pending[q] is not None:
                        wire_end[q] = ready[q] + sq[q]
                    if wire_end[q] > end_max:
                        end_max = wire_end[q]
                key = self._leaf_key(canceled, end_max, wire_end)
                if self.best_key is None or key < self.best_key:
                    self.best_key = key
                    self.best_leaf = (mask, tuple(placed))
                return
            if prune(canceled, cur_makespan, len(left)):
                return
            last = placed[-1] if placed else None
            for i in list(left):
                if last is not None and i < last and not self.dependent[i][last]:
                    continue  # canonical representative has ascending independent runs
                c, t, d = control[i], target[i], dur[i]
                saved = {
                    "ready": (ready[c], ready[t]),
                    "pending": (pending[c], pending[t]),
                    "makespan": cur_makespan,
                }
                new_canceled = canceled
                if pending[t] is not None and cancelable[t]:
                    new_canceled += 2
                    pending[t] = None
                else:
                    if pending[t] is not None:
                        pending[t] = None
                        ready[t] += sq[t]
                    ready[t] += sq[t]  # PRE Hadamard
                if pending[c] is not None:
                    pending[c] = None
                    ready[c] += sq[c]
                start = max(ready[c], ready[t])
                for a, b in m.crosstalk_pairs:
                    other = b if a == i else (a if b == i else None)
                    if other is not None and other in cnot_end and cnot_end[other] > start:
                        start = cnot_end[other]
                end = start + d
                ready[c] = ready[t] = end
                cnot_end[i] = end
                pending[t] = ("post", m.post_id(i))
                remaining_load[c] -= d
                remaining_load[t] -= d
                left.remove(i)
                placed.append(i)

                dfs(placed, new_canceled, max(cur_makespan, end), left)

                placed.pop()
                left.append(i)
                left.sort()
                remaining_load[c] += d
                remaining_load[t] += d
                del cnot_end[i]
                ready[c], ready[t] = saved["ready"]
                pending[c], pending[t] = saved["pending"]
                cur_makespan = saved["makespan"]

        dfs([], 0, 0, all_edges)


def _vars_from_leaf(m: SchedModel, mask: int, perm: Tuple[int, ...]) -> ModelVars:
    canceled, makespan, wire_end, windows, canceled_ids = evaluate_order(
        m, mask, perm, record=True
    )
    control, target, dur, _ = _direction_tables(m, mask)
    c_bits = {i: bool((mask >> i) & 1) for i in range(m.num_cnots)}
    s_map: Dict[int, Fraction] = {}
    t_map: Dict[int, Fraction] = {}
    b_map: Dict[int, bool] = {}

    # Ghost windows for canceled Hadamards: tucked at the start of the
    # longest CNOT window targeting the wire (the containment witness).
    witness_for: Dict[int, int] = {}
    for q in m.mapped_qubits:
        best = None
        for i in range(m.num_cnots):
            if target[i] == q and (best is None or dur[i] > dur[best] or (dur[i] == dur[best] and i < best)):
                best = i
        if best is not None:
            witness_for[q] = best

    for gate in m.gates:
        gid = gate.id
        if gate.kind == "h":
            b_map[gid] = gid in canceled_ids
        if gid in windows:
            s, t = windows[gid]
            s_map[gid], t_map[gid] = Fraction(s), Fraction(t)
        else:
            origin, _, arg = gate.origin.partition(":")
            if origin == "prep":
                q = m.prep_wire(int(arg))
            else:
                q = target[int(arg)]
            w = witness_for[q]
            ws = windows[w][0]
            s_map[gid] = Fraction(ws)
            t_map[gid] = Fraction(ws + m.sq_dur[q])
    return ModelVars(C=c_bits, S=s_map, T=t_map, B=b_map)


def solve_exact(m: SchedModel, cap: int = DEFAULT_EXACT_CAP) -> Solution:
    """Provably optimal solution by exhaustive branch-and-bound."""
    if m.num_cnots > cap:
        raise CapExceededError(
            f"{m.num_cnots} CNOTs exceeds the exact-search cap of {cap}; use emit-smt"
        )
    kind = m.objective.kind
    if kind is ObjectiveKind.SMT_RUNTIME:
        cancel_value, _, _ = _Search(m, "cancel").run()
        makespan_value, mask, perm = _Search(
            m, "makespan", require_canceled=cancel_value
        ).run()
        objective_value = (cancel_value, Fraction(makespan_value))
    else:
        mode = {
            ObjectiveKind.MAX_CANCELLATION: "cancel",
            ObjectiveKind.MIN_MAKESPAN: "makespan",
            ObjectiveKind.MAX_REMAINING_COHERENCE: "coherence",
        }[kind]
        value, mask, perm = _Search(m, mode).run()
        if mode == "makespan":
            objective_value = Fraction(value)
        elif mode == "cancel":
            objective_value = int(value)
        else:
            objective_value = Fraction(value)
    vars = _vars_from_leaf(m, mask, perm)
    return Solution(vars=vars, objective_value=objective_value, proven_optimal=True)
