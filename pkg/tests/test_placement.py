import itertools

import pytest

from gscompile.device import load_calibration, sample_calibration_path, topology_graph
from gscompile.errors import NotNativeError
from gscompile.graphs import graph_from_edges, linear_graph
from gscompile.placement import (
    Embedding,
    best_placement,
    enumerate_embeddings,
    score_embedding,
)

from conftest import line_calibration, make_calibration


def brute_force_embeddings(g, cal):
    """Independent oracle: try every injective vertex->qubit tuple."""
    topo = topology_graph(cal)
    qubits = sorted(topo)
    found = []
    for perm in itertools.permutations(qubits, g.n):
        if all(perm[b] in topo[perm[a]] for a, b in g.edges):
            found.append(perm)
    return found


def test_linear2_into_path3_has_four_embeddings():
    cal = line_calibration(3)
    found = sorted(e.mapping for e in enumerate_embeddings(linear_graph(2), cal))
    assert found == [(0, 1), (1, 0), (1, 2), (2, 1)]


def test_triangle_into_tree_is_empty():
    tri = graph_from_edges(3, [(0, 1), (0, 2), (1, 2)])
    cal = line_calibration(4)
    assert list(enumerate_embeddings(tri, cal)) == []
    with pytest.raises(NotNativeError):
        best_placement(tri, cal)


def test_embeddings_unique_and_match_brute_force():
    g = graph_from_edges(4, [(0, 1), (1, 2), (1, 3)])  # star-ish
    cal = make_calibration(5, [(0, 1), (1, 2), (2, 3), (1, 4)])
    mine = sorted(e.mapping for e in enumerate_embeddings(g, cal))
    assert len(mine) == len(set(mine))
    assert mine == sorted(brute_force_embeddings(g, cal))


def test_linear8_count_matches_path_oracle():
    """Path embeddings = directed simple paths of length 8 in the topology."""
    cal = load_calibration(sample_calibration_path())
    topo = topology_graph(cal)

    def count_paths(length):
        total = 0
        def walk(v, seen, left):
            nonlocal total
            if left == 0:
                total += 1
                return
            for w in topo[v]:
                if w not in seen:
                    seen.add(w)
                    walk(w, seen, left - 1)
                    seen.remove(w)
        for v in topo:
            walk(v, {v}, length - 1)
        return total

    mine = sum(1 for _ in enumerate_embeddings(linear_graph(8), cal))
    assert mine == count_paths(8)


def test_score_trivial_cases():
    g = linear_graph(2)
    perfect = line_calibration(2, sq_error=0.0, cx_error=0.0)
    e = Embedding((0, 1), 0.0)
    assert score_embedding(e, g, perfect) == 1.0
    half = line_calibration(2, sq_error=0.0, cx_error=0.5)
    assert score_embedding(e, g, half) == 0.5


def test_best_placement_is_exhaustive_max():
    cal = load_calibration(sample_calibration_path())
    g = linear_graph(3)
    best = best_placement(g, cal)
    scores = [score_embedding(e, g, cal) for e in enumerate_embeddings(g, cal)]
    assert best.score == max(scores)


def test_best_placement_tie_break_deterministic():
    g = linear_graph(2)
    cal = line_calibration(3)  # all scores equal
    assert best_placement(g, cal).mapping == (0, 1)
