"""Hardware-aware compiler for graph-state preparation circuits.

Pipeline: place a target graph onto the device topology, build an exact
scheduling model (gate directions, start/end times, Hadamard cancellation),
solve it optimally or emit it as an SMT-LIB optimization problem, decode the
solution into a timed circuit, and verify the result by stabilizer simulation
and noise-model fidelity estimation.
"""

from .device import Coupler, DeviceCalibration, PhysicalQubit, load_calibration
from .graphs import GraphSpec, PauliString, linear_graph, stabilizer_generators, stabilizer_group
from .placement import Embedding, best_placement, enumerate_embeddings, score_embedding
from .model import Objective, ObjectiveKind, SchedModel, Solution, build_model, check_solution, emit_smtlib, parse_external_solution
from .solver import solve_exact
from .oracle import oracle_search
from .circuit import TimedCircuit, TimedGate, derive_circuit, naive_circuit
from .sim import NoiseModel, NoisyEstimate, Tableau, density_oracle, estimate_fidelity, expectation, simulate_ideal

__version__ = "0.1.0"
