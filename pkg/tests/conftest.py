import random

import pytest

from gscompile.device import DeviceCalibration, calibration_from_json
from gscompile.graphs import GraphSpec
from gscompile.placement import Embedding


def make_calibration(
    n: int,
    edges,
    sq=35,
    cnot=300,
    coherence_us=100.0,
    p01=0.02,
    p10=0.03,
    sq_error=0.001,
    cx_error=0.01,
    label="test",
) -> DeviceCalibration:
    """Uniform calibration over an arbitrary topology.

    sq/cnot may be ints (uniform) or callables (per qubit / per edge,
    returning (d_ab, d_ba) for edges).
    """
    qubits = [
        {
            "index": i,
            "coherence_time_us": coherence_us(i) if callable(coherence_us) else coherence_us,
            "readout_p01": p01,
            "readout_p10": p10,
            "sq_duration_ns": sq(i) if callable(sq) else sq,
            "sq_error": sq_error,
        }
        for i in range(n)
    ]
    couplers = []
    for a, b in edges:
        dab, dba = cnot(a, b) if callable(cnot) else (cnot, cnot)
        couplers.append(
            {"a": a, "b": b, "duration_ab_ns": dab, "duration_ba_ns": dba, "error": cx_error}
        )
    return calibration_from_json(
        {"snapshot_label": label, "qubits": qubits, "couplers": couplers}
    )


def line_calibration(n: int, **kw) -> DeviceCalibration:
    return make_calibration(n, [(i, i + 1) for i in range(n - 1)], **kw)


def graph_calibration(g: GraphSpec, **kw) -> DeviceCalibration:
    """Calibration whose topology is exactly the graph (identity placement)."""
    return make_calibration(g.n, g.sorted_edges(), **kw)


def identity_embedding(g: GraphSpec) -> Embedding:
    return Embedding(tuple(range(g.n)), 1.0)


def random_calibration(g: GraphSpec, rng: random.Random, **kw) -> DeviceCalibration:
    """Matching topology with randomized integer durations and coherences."""
    return make_calibration(
        g.n,
        g.sorted_edges(),
        sq=lambda i: rng.randint(20, 60),
        cnot=lambda a, b: (rng.randint(181, 587), rng.randint(181, 587)),
        coherence_us=lambda i: float(rng.randint(50, 300)),
        **kw,
    )


@pytest.fixture
def sym3():
    """Symmetric 3-qubit line: 35 ns Hadamards, 300 ns CNOTs both ways."""
    return line_calibration(3)
