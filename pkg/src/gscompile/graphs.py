"""Target graph states: graph definition, stabilizers, nativity check.

A graph state over G=(V,E) is stabilized by one generator per vertex: X on
the vertex, Z on each of its neighbors. The full stabilizer group (all 2^n
subset products) is what the fidelity estimation protocol measures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from .errors import CapExceededError, ValidationError
from .subiso import adjacency, embeddings_iter

STABILIZER_GROUP_CAP = 12

_PAULI_CHARS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


@dataclass(frozen=True)
class PauliString:
    """n-qubit Pauli operator as X/Z bit masks plus a +-1 sign.

    Bit i of each mask addresses qubit i; a Y is an overlapping X and Z bit.
    """

    n: int
    x_mask: int
    z_mask: int
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValidationError(f"sign must be +1 or -1, got {self.sign}")
        if self.x_mask >> self.n or self.z_mask >> self.n:
            raise ValidationError("mask has bits beyond qubit count")

    @property
    def label(self) -> str:
        chars = "".join(
            _PAULI_CHARS[((self.x_mask >> i) & 1, (self.z_mask >> i) & 1)]
            for i in range(self.n)
        )
        return ("+" if self.sign > 0 else "-") + chars

    def support(self) -> int:
        return self.x_mask | self.z_mask

    def commutes_with(self, other: "PauliString") -> bool:
        s = (self.x_mask & other.z_mask) ^ (self.z_mask & other.x_mask)
        return bin(s).count("1") % 2 == 0


def pauli_mul(p: PauliString, q: PauliString) -> PauliString:
    """Product p*q with full {+-1, +-i} phase bookkeeping.

    Graph-state stabilizer products are Hermitian, so the result must land on
    a real sign; an imaginary phase is raised as an internal error.
    """
    if p.n != q.n:
        raise ValidationError("Pauli size mismatch")
    phase = 0  # exponent of i, mod 4
    for i in range(p.n):
        x1, z1 = (p.x_mask >> i) & 1, (p.z_mask >> i) & 1
        x2, z2 = (q.x_mask >> i) & 1, (q.z_mask >> i) & 1
        if x1 == 0 and z1 == 0:
            continue
        if x1 and z1:
            phase += z2 - x2
        elif x1:
            phase += z2 * (2 * x2 - 1)
        else:
            phase += x2 * (1 - 2 * z2)
    if p.sign < 0:
        phase += 2
    if q.sign < 0:
        phase += 2
    phase %= 4
    if phase % 2:
        raise AssertionError("Pauli product has imaginary phase; non-Hermitian result")
    sign = 1 if phase == 0 else -1
    return PauliString(p.n, p.x_mask ^ q.x_mask, p.z_mask ^ q.z_mask, sign)


@dataclass(frozen=True)
class GraphSpec:
    """Simple connected undirected graph over vertices 0..n-1."""

    n: int
    edges: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"graph needs at least 2 vertices, got {self.n}")
        for a, b in self.edges:
            if a == b:
                raise ValidationError(f"self-loop at vertex {a}")
            if not (0 <= a < b < self.n):
                raise ValidationError(f"edge ({a},{b}) not canonical within 0..{self.n - 1}")
        if not self._connected():
            raise ValidationError("graph must be connected")

    def _connected(self) -> bool:
        adj = self.adjacency()
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def adjacency(self) -> Dict[int, FrozenSet[int]]:
        return adjacency(self.n, self.edges)

    def neighbors(self, v: int) -> FrozenSet[int]:
        return self.adjacency()[v]

    def sorted_edges(self) -> List[Tuple[int, int]]:
        return sorted(self.edges)


def graph_from_edges(n: int, edges: Iterable[Tuple[int, int]]) -> GraphSpec:
    canon = frozenset((min(a, b), max(a, b)) for a, b in edges)
    return GraphSpec(n, canon)


def linear_graph(n: int) -> GraphSpec:
    """Path graph 0-1-...-(n-1); needs n >= 2."""
    if n < 2:
        raise ValidationError(f"linear graph needs n >= 2, got {n}")
    return graph_from_edges(n, [(i, i + 1) for i in range(n - 1)])


def ring_graph(n: int) -> GraphSpec:
    if n < 3:
        raise ValidationError(f"ring graph needs n >= 3, got {n}")
    return graph_from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(n: int) -> GraphSpec:
    """Star with center 0 and n-1 leaves."""
    if n < 2:
        raise ValidationError(f"star graph needs n >= 2, got {n}")
    return graph_from_edges(n, [(0, i) for i in range(1, n)])


def fig1_seven() -> GraphSpec:
    """Seven-vertex 'rotated H' tree: hubs 1 and 5 (degree 3), bridge 3.

    Degree sequence (3,3,2,1,1,1,1): vertices 0,2 hang off hub 1; vertices
    4,6 hang off hub 5; vertex 3 bridges the hubs.
    """
    return graph_from_edges(7, [(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)])


def builtin_graph(name: str) -> GraphSpec:
    """Resolve a builtin graph name: linear:<n>, ring:<n>, star:<n>, fig1-seven."""
    if name == "fig1-seven":
        return fig1_seven()
    if ":" in name:
        kind, _, arg = name.partition(":")
        try:
            n = int(arg)
        except ValueError:
            raise ValidationError(f"bad graph size in {name!r}")
        factory = {"linear": linear_graph, "ring": ring_graph, "star": star_graph}.get(kind)
        if factory is not None:
            return factory(n)
    raise ValidationError(f"unknown builtin graph {name!r}")


def load_graph(path) -> GraphSpec:
    """Load a graph file: UTF-8 JSON {"n": int, "edges": [[a, b], ...]}."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed graph file {path}: {exc}") from exc
    if not isinstance(data, dict) or set(data) != {"n", "edges"}:
        raise ValidationError("graph file must have exactly the keys 'n' and 'edges'")
    return graph_from_edges(int(data["n"]), [tuple(e) for e in data["edges"]])


def stabilizer_generators(g: GraphSpec) -> List[PauliString]:
    """One generator per vertex: X there, Z on every neighbor, sign +1."""
    adj = g.adjacency()
    gens = []
    for v in range(g.n):
        z = 0
        for w in adj[v]:
            z |= 1 << w
        gens.append(PauliString(g.n, 1 << v, z, 1))
    return gens


def stabilizer_group(g: GraphSpec, cap: int = STABILIZER_GROUP_CAP) -> List[PauliString]:
    """All 2^n subset products of the generators, identity first.

    Element k is the product of generators selected by the bits of k, so the
    ordering is deterministic.
    """
    if g.n > cap:
        raise CapExceededError(f"stabilizer group for n={g.n} exceeds cap {cap}")
    gens = stabilizer_generators(g)
    group = [PauliString(g.n, 0, 0, 1)]
    for gen in gens:
        group.extend(pauli_mul(el, gen) for el in list(group))
    return group


def is_native(g: GraphSpec, topo_adj: Dict[int, FrozenSet[int]]) -> Optional[Tuple[int, ...]]:
    """First embedding of g into the topology in search order, or None."""
    for mapping in embeddings_iter(g.n, g.edges, topo_adj):
        return mapping
    return None
