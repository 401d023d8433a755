"""Exhaustive subgraph-isomorphism search (VF2-style vertex ordering).

Finds injective mappings of a connected pattern graph into a host graph such
that every pattern edge lands on a host edge (non-induced embedding). Search
order is deterministic: pattern vertices are visited in BFS order from vertex
0, host candidates in ascending index order, so callers can rely on a stable
enumeration sequence.
"""

from collections import deque
from typing import Dict, FrozenSet, Iterable, Iterator, List, Tuple


def bfs_order(n: int, adj: Dict[int, FrozenSet[int]]) -> List[int]:
    """BFS vertex order from vertex 0; assumes a connected graph."""
    order = [0]
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in sorted(adj[v]):
            if w not in seen:
                seen.add(w)
                order.append(w)
                queue.append(w)
    return order


def adjacency(n: int, edges: Iterable[Tuple[int, int]]) -> Dict[int, FrozenSet[int]]:
    adj: Dict[int, set] = {v: set() for v in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    return {v: frozenset(nb) for v, nb in adj.items()}


def embeddings_iter(
    n: int,
    edges: Iterable[Tuple[int, int]],
    host_adj: Dict[int, FrozenSet[int]],
) -> Iterator[Tuple[int, ...]]:
    """Yield every embedding of the pattern into the host exactly once.

    An embedding is a tuple m of length n with m[v] the host vertex assigned
    to pattern vertex v. Pattern edges must map onto host edges; extra host
    edges between mapped vertices are allowed.
    """
    pattern_adj = adjacency(n, edges)
    if n == 0:
        return
    order = bfs_order(n, pattern_adj)
    degrees = {v: len(pattern_adj[v]) for v in range(n)}
    hosts = sorted(host_adj)

    mapping: Dict[int, int] = {}
    used = set()

    def extend(i: int) -> Iterator[Tuple[int, ...]]:
        if i == len(order):
            yield tuple(mapping[v] for v in range(n))
            return
        v = order[i]
        mapped_nbrs = [w for w in pattern_adj[v] if w in mapping]
        if mapped_nbrs:
            # Candidates must neighbor every already-mapped pattern neighbor.
            cands = set(host_adj[mapping[mapped_nbrs[0]]])
            for w in mapped_nbrs[1:]:
                cands &= host_adj[mapping[w]]
            candidates = sorted(cands)
        else:
            candidates = hosts
        for h in candidates:
            if h in used or len(host_adj[h]) < degrees[v]:
                continue
            mapping[v] = h
            used.add(h)
            yield from extend(i + 1)
            del mapping[v]
            used.discard(h)

    yield from extend(0)
