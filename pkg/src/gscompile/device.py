"""Device model: qubits, couplers, calibration snapshot ingest.

The calibration file is the single source of per-qubit coherence/readout data
and per-direction CNOT timings. Durations are kept as exact integer
nanoseconds so downstream scheduling and optimality checks stay exact.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, FrozenSet, List, Tuple

from .errors import ValidationError

_QUBIT_KEYS = {"index", "coherence_time_us", "readout_p01", "readout_p10", "sq_duration_ns", "sq_error"}
_COUPLER_KEYS = {"a", "b", "duration_ab_ns", "duration_ba_ns", "error"}


@dataclass(frozen=True)
class PhysicalQubit:
    """One device qubit: coherence, readout confusion, single-qubit gate data."""

    index: int
    coherence_time_us: float
    readout_p01: float
    readout_p10: float
    sq_duration_ns: int
    sq_error: float

    def __post_init__(self):
        if self.index < 0:
            raise ValidationError(f"qubits[{self.index}].index must be non-negative")
        if self.coherence_time_us <= 0:
            raise ValidationError(f"qubits[{self.index}].coherence_time_us must be > 0")
        if self.sq_duration_ns <= 0:
            raise ValidationError(f"qubits[{self.index}].sq_duration_ns must be > 0")
        for name in ("readout_p01", "readout_p10", "sq_error"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"qubits[{self.index}].{name} must be in [0, 1]")


@dataclass(frozen=True)
class Coupler:
    """Directed-timing coupler: duration_ab is the CNOT with control `a`."""

    a: int
    b: int
    duration_ab_ns: int
    duration_ba_ns: int
    error: float

    def __post_init__(self):
        if self.a == self.b:
            raise ValidationError(f"couplers[({self.a},{self.b})]: endpoints must differ")
        if self.duration_ab_ns <= 0 or self.duration_ba_ns <= 0:
            raise ValidationError(f"couplers[({self.a},{self.b})]: durations must be > 0")
        if not 0.0 <= self.error <= 1.0:
            raise ValidationError(f"couplers[({self.a},{self.b})].error must be in [0, 1]")

    @property
    def pair(self) -> Tuple[int, int]:
        return (min(self.a, self.b), max(self.a, self.b))


@dataclass(frozen=True)
class DeviceCalibration:
    """Immutable calibration snapshot; safe to share across threads."""

    snapshot_label: str
    qubits: Tuple[PhysicalQubit, ...]
    couplers: Tuple[Coupler, ...]

    def __post_init__(self):
        indices = [q.index for q in self.qubits]
        if len(set(indices)) != len(indices):
            raise ValidationError("qubits: duplicate index")
        known = set(indices)
        pairs = set()
        for c in self.couplers:
            for end in (c.a, c.b):
                if end not in known:
                    raise ValidationError(f"couplers[({c.a},{c.b})]: endpoint {end} is not a qubit")
            if c.pair in pairs:
                raise ValidationError(f"couplers[({c.a},{c.b})]: duplicate coupler for pair {c.pair}")
            pairs.add(c.pair)

    def qubit(self, index: int) -> PhysicalQubit:
        return self._qubit_map()[index]

    def _qubit_map(self) -> Dict[int, PhysicalQubit]:
        return {q.index: q for q in self.qubits}

    def coupler(self, a: int, b: int) -> Coupler:
        key = (min(a, b), max(a, b))
        for c in self.couplers:
            if c.pair == key:
                return c
        raise ValidationError(f"no coupler for pair {key}")


def _require_keys(obj: dict, keys: set, where: str) -> None:
    extra = set(obj) - keys
    if extra:
        raise ValidationError(f"{where}: unknown keys {sorted(extra)}")
    missing = keys - set(obj)
    if missing:
        raise ValidationError(f"{where}: missing keys {sorted(missing)}")


def calibration_from_json(data: dict) -> DeviceCalibration:
    _require_keys(data, {"snapshot_label", "qubits", "couplers"}, "calibration")
    qubits = []
    for i, q in enumerate(data["qubits"]):
        _require_keys(q, _QUBIT_KEYS, f"qubits[{i}]")
        qubits.append(
            PhysicalQubit(
                index=int(q["index"]),
                coherence_time_us=float(q["coherence_time_us"]),
                readout_p01=float(q["readout_p01"]),
                readout_p10=float(q["readout_p10"]),
                sq_duration_ns=int(q["sq_duration_ns"]),
                sq_error=float(q["sq_error"]),
            )
        )
    couplers = []
    for i, c in enumerate(data["couplers"]):
        _require_keys(c, _COUPLER_KEYS, f"couplers[{i}]")
        couplers.append(
            Coupler(
                a=int(c["a"]),
                b=int(c["b"]),
                duration_ab_ns=int(c["duration_ab_ns"]),
                duration_ba_ns=int(c["duration_ba_ns"]),
                error=float(c["error"]),
            )
        )
    return DeviceCalibration(str(data["snapshot_label"]), tuple(qubits), tuple(couplers))


def load_calibration(path) -> DeviceCalibration:
    """Load and validate a calibration JSON file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed calibration file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("calibration file must hold a JSON object")
    return calibration_from_json(data)


def save_calibration(cal: DeviceCalibration, path) -> None:
    """Write a calibration back out; load(save(x)) round-trips field-for-field."""
    data = {
        "snapshot_label": cal.snapshot_label,
        "qubits": [asdict(q) for q in cal.qubits],
        "couplers": [asdict(c) for c in cal.couplers],
    }
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def topology_graph(cal: DeviceCalibration) -> Dict[int, FrozenSet[int]]:
    """Undirected simple coupling graph as an adjacency map over qubit indices."""
    adj: Dict[int, set] = {q.index: set() for q in cal.qubits}
    for c in cal.couplers:
        adj[c.a].add(c.b)
        adj[c.b].add(c.a)
    return {v: frozenset(nb) for v, nb in sorted(adj.items())}


def sample_calibration_path() -> Path:
    """Path of the bundled 27-qubit heavy-hex calibration snapshot."""
    return Path(__file__).parent / "data" / "sample27.json"
