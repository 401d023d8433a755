import random
from fractions import Fraction

import pytest

from gscompile.errors import CapExceededError
from gscompile.graphs import fig1_seven, linear_graph, ring_graph, star_graph
from gscompile.model import Objective, ObjectiveKind, build_model, check_solution
from gscompile.oracle import ORACLE_CAP, oracle_search, oracle_sweep
from gscompile.solver import solve_exact

from conftest import (
    graph_calibration,
    identity_embedding,
    line_calibration,
    random_calibration,
)


def build(g, cal, kind, crosstalk=False):
    return build_model(g, identity_embedding(g), cal, Objective(kind, crosstalk))


class TestDerivedConstants:
    def test_single_edge_makespan_370(self):
        m = build(linear_graph(2), line_calibration(2), ObjectiveKind.MIN_MAKESPAN)
        s = solve_exact(m)
        assert s.objective_value == 370  # 35 prep + 300 CNOT + 35 trailing H
        assert s.objective_value == oracle_search(m).objective_value

    def test_linear3_lex_optimum(self, sym3):
        m = build(linear_graph(3), sym3, ObjectiveKind.SMT_RUNTIME)
        s = solve_exact(m)
        assert s.objective_value == (4, Fraction(670))
        assert s.proven_optimal

    def test_linear5_max_cancellation(self):
        m = build(linear_graph(5), line_calibration(5), ObjectiveKind.MAX_CANCELLATION)
        s = solve_exact(m)
        # 5 preps + 8 sandwich H; optimum keeps one H per qubit: 13 - 5 = 8
        assert s.objective_value == 8

    def test_linear_n_hadamard_floor(self):
        # after maximal cancellation a linear chain keeps exactly n Hadamards
        for n in (3, 4, 5, 6):
            cal = line_calibration(n)
            m = build(linear_graph(n), cal, ObjectiveKind.MAX_CANCELLATION)
            s = solve_exact(m)
            total_h = n + 2 * (n - 1)
            assert total_h - s.objective_value == n

    def test_cancellation_impossible_when_sq_too_long(self):
        # Hadamard longer than every CNOT window: nothing fits inside, B all false
        cal = line_calibration(2, sq=400, cnot=300)
        m = build(linear_graph(2), cal, ObjectiveKind.MAX_CANCELLATION)
        assert solve_exact(m).objective_value == 0


class TestSolverProperties:
    @pytest.mark.parametrize("kind", list(ObjectiveKind))
    def test_solutions_satisfy_model(self, kind):
        rng = random.Random(7)
        for g in (linear_graph(4), star_graph(4), ring_graph(4)):
            cal = random_calibration(g, rng)
            m = build(g, cal, kind)
            s = solve_exact(m)
            assert check_solution(m, s) == []
            assert s.proven_optimal

    def test_cap_exceeded(self):
        g = linear_graph(12)  # 11 CNOTs > default cap 10
        cal = line_calibration(12)
        m = build(g, cal, ObjectiveKind.MIN_MAKESPAN)
        with pytest.raises(CapExceededError, match="emit-smt"):
            solve_exact(m)

    def test_crosstalk_serializes_adjacent_cnots(self):
        g = linear_graph(4)
        cal = line_calibration(4)
        free = solve_exact(build(g, cal, ObjectiveKind.MIN_MAKESPAN))
        guarded = solve_exact(build(g, cal, ObjectiveKind.MIN_MAKESPAN, crosstalk=True))
        assert guarded.objective_value >= free.objective_value
        m = build(g, cal, ObjectiveKind.MIN_MAKESPAN, crosstalk=True)
        assert check_solution(m, solve_exact(m)) == []

    def test_direction_choice_uses_faster_orientation(self):
        # one very slow direction: the solver must pick the fast one
        cal = line_calibration(2, cnot=lambda a, b: (500, 200))
        m = build(linear_graph(2), cal, ObjectiveKind.MIN_MAKESPAN)
        s = solve_exact(m)
        assert s.vars.C[0] is False  # control = coupler endpoint b
        assert s.objective_value == 35 + 200 + 35

    def test_coherence_objective_prefers_short_critical_wire(self):
        # qubit 1 has far less coherence; remaining-coherence optimum is
        # bounded by it and must match the oracle
        g = linear_graph(3)
        cal = line_calibration(3, coherence_us=lambda i: 1.0 if i == 1 else 100.0)
        m = build(g, cal, ObjectiveKind.MAX_REMAINING_COHERENCE)
        s = solve_exact(m)
        assert s.objective_value == oracle_search(m).objective_value
        assert s.objective_value < Fraction(1000)


class TestOracleAgreement:
    def test_matches_on_random_instances(self):
        rng = random.Random(123)
        graphs = [linear_graph(3), linear_graph(4), star_graph(4)]
        for trial in range(6):
            g = graphs[trial % len(graphs)]
            cal = random_calibration(g, rng)
            e = identity_embedding(g)
            m0 = build_model(g, e, cal, Objective(ObjectiveKind.MIN_MAKESPAN))
            sweep = oracle_sweep(m0)
            for kind in ObjectiveKind:
                m = build_model(g, e, cal, Objective(kind))
                assert solve_exact(m).objective_value == sweep[kind][0], (trial, kind)

    def test_oracle_refuses_large_instances(self):
        g = linear_graph(8)  # 7 CNOTs > oracle cap 6
        cal = line_calibration(8)
        m = build(g, cal, ObjectiveKind.MIN_MAKESPAN)
        with pytest.raises(CapExceededError):
            oracle_sweep(m)
        assert ORACLE_CAP == 6

    def test_oracle_solution_is_checkable(self, sym3):
        m = build(linear_graph(3), sym3, ObjectiveKind.SMT_RUNTIME)
        s = oracle_search(m)
        assert check_solution(m, s) == []


def test_fig1_seven_compiles_with_six_cnots():
    g = fig1_seven()
    cal = graph_calibration(g)
    m = build(g, cal, ObjectiveKind.SMT_RUNTIME)
    s = solve_exact(m)
    assert m.num_cnots == 6
    assert check_solution(m, s) == []
