"""Stabilizer verification and noisy fidelity estimation for timed circuits.

Ideal verification runs the circuit on a stabilizer tableau and checks every
stabilizer-group element has expectation +1. Noisy estimation is a Pauli-frame
Monte Carlo: one measurement setting per stabilizer element, depolarizing
noise after gates, idle dephasing in the schedule's gaps, readout confusion,
and optional unbiased readout mitigation. A dense density-matrix oracle
replays the exact same event stream for small systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .circuit import TimedCircuit
from .device import DeviceCalibration
from .errors import CapExceededError, ValidationError
from .graphs import PauliString, stabilizer_group

DENSITY_CAP = 5


# ---------------------------------------------------------------------------
# Stabilizer tableau

def _g_exponents(x1, z1, x2, z2):
    """Phase exponent of i contributed per qubit when multiplying Paulis."""
    x1 = x1.astype(np.int64)
    z1 = z1.astype(np.int64)
    x2 = x2.astype(np.int64)
    z2 = z2.astype(np.int64)
    return (
        x1 * z1 * (z2 - x2)
        + x1 * (1 - z1) * z2 * (2 * x2 - 1)
        + (1 - x1) * z1 * x2 * (1 - 2 * z2)
    )


def _rowsum(x, z, r, h: int, i: int) -> None:
    """Row h := row i * row h with exact sign tracking (rows must commute)."""
    total = 2 * int(r[h]) + 2 * int(r[i]) + int(_g_exponents(x[i], z[i], x[h], z[h]).sum())
    total %= 4
    if total % 2:
        raise AssertionError("row product has imaginary phase")
    r[h] = total // 2
    x[h] ^= x[i]
    z[h] ^= z[i]


class Tableau:
    """Stabilizer rows of an n-qubit state: X/Z bit matrices plus sign bits."""

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((n, n), dtype=np.uint8)
        self.z = np.eye(n, dtype=np.uint8)
        self.r = np.zeros(n, dtype=np.uint8)  # sign (-1)^r

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        t.x = self.x.copy()
        t.z = self.z.copy()
        t.r = self.r.copy()
        return t

    def h(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def s(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.z[:, q] ^= self.x[:, q]

    def sdg(self, q: int) -> None:
        self.r ^= self.x[:, q] & (1 - self.z[:, q])
        self.z[:, q] ^= self.x[:, q]

    def cx(self, c: int, t: int) -> None:
        self.r ^= self.x[:, c] & self.z[:, t] & (self.x[:, t] ^ self.z[:, c] ^ 1)
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]


def simulate_ideal(c: TimedCircuit) -> Tableau:
    """Run the timed circuit on a tableau over graph vertices, from |0...0>."""
    vmap = c.vertex_of()
    tab = Tableau(c.n)
    for g in c.gates:
        if g.kind == "h":
            tab.h(vmap[g.wires[0]])
        elif g.kind == "cx":
            tab.cx(vmap[g.wires[0]], vmap[g.wires[1]])
        else:
            raise ValidationError(f"unknown gate kind {g.kind!r}")
    return tab


def _rref_with_phases(tab: Tableau):
    """Reduce rows over the 2n symplectic columns (X block first), keeping
    signs exact. Returns (x, z, r, pivots) where pivots[k] is row k's column."""
    x, z, r = tab.x.copy(), tab.z.copy(), tab.r.copy()
    n = tab.n
    cols = [("x", j) for j in range(n)] + [("z", j) for j in range(n)]
    row = 0
    pivots: List[Tuple[str, int]] = []
    for col in cols:
        block = x if col[0] == "x" else z
        j = col[1]
        k = next((k for k in range(row, n) if block[k, j]), None)
        if k is None:
            continue
        if k != row:
            for arr in (x, z):
                arr[[row, k]] = arr[[k, row]]
            r[[row, k]] = r[[k, row]]
        for other in range(n):
            if other != row and block[other, j]:
                _rowsum(x, z, r, other, row)
        pivots.append(col)
        row += 1
    return x, z, r, pivots


def _member_phase(rref, px: np.ndarray, pz: np.ndarray) -> Optional[int]:
    """Sign bit of the group element matching the unsigned Pauli (px, pz),
    or None when the Pauli is not in the stabilizer group."""
    x, z, r, pivots = rref
    n = px.size
    tx, tz = px.copy(), pz.copy()
    acc_x = np.zeros(n, dtype=np.uint8)
    acc_z = np.zeros(n, dtype=np.uint8)
    phase = 0
    for k, (blk, j) in enumerate(pivots):
        bit = tx[j] if blk == "x" else tz[j]
        if not bit:
            continue
        phase += 2 * int(r[k]) + int(_g_exponents(x[k], z[k], acc_x, acc_z).sum())
        acc_x ^= x[k]
        acc_z ^= z[k]
        tx ^= x[k]
        tz ^= z[k]
    if tx.any() or tz.any():
        return None
    phase %= 4
    if phase % 2:
        raise AssertionError("group member has imaginary phase")
    return phase // 2


def expectation(tab: Tableau, p: PauliString) -> int:
    """Expectation of a signed Pauli on the tableau's state: +1, -1, or 0."""
    if p.n != tab.n:
        raise ValidationError("Pauli size does not match the tableau")
    px = np.array([(p.x_mask >> i) & 1 for i in range(p.n)], dtype=np.uint8)
    pz = np.array([(p.z_mask >> i) & 1 for i in range(p.n)], dtype=np.uint8)
    anti = ((tab.x @ pz.astype(np.int64)) + (tab.z @ px.astype(np.int64))) % 2
    if anti.any():
        return 0
    phase = _member_phase(_rref_with_phases(tab), px, pz)
    if phase is None:  # unreachable for a full tableau, kept as a guard
        return 0
    sign = -1 if phase else 1
    return 1 if sign == p.sign else -1


# ---------------------------------------------------------------------------
# Noise model

@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Per-qubit and per-coupler error rates keyed by physical qubit index.

    Gates get symmetric depolarizing noise, idle intervals get pure dephasing
    with probability (1 - exp(-t / D_q)) / 2, readout gets an independent
    per-qubit confusion matrix [[1-p01, p10], [p01, 1-p10]].
    """

    sq_error: Dict[int, float]
    cx_error: Dict[Tuple[int, int], float]
    coherence_ns: Dict[int, float]
    readout: Dict[int, Tuple[float, float]]  # (p01, p10)

    @classmethod
    def from_calibration(cls, cal: DeviceCalibration) -> "NoiseModel":
        return cls(
            sq_error={q.index: q.sq_error for q in cal.qubits},
            cx_error={c.pair: c.error for c in cal.couplers},
            coherence_ns={q.index: q.coherence_time_us * 1000.0 for q in cal.qubits},
            readout={q.index: (q.readout_p01, q.readout_p10) for q in cal.qubits},
        )

    @classmethod
    def noiseless(cls, cal: DeviceCalibration) -> "NoiseModel":
        return cls.from_calibration(cal).without_gate_noise().without_readout_noise()

    @classmethod
    def readout_only(cls, cal: DeviceCalibration) -> "NoiseModel":
        return cls.from_calibration(cal).without_gate_noise()

    def without_gate_noise(self) -> "NoiseModel":
        return replace(
            self,
            sq_error={q: 0.0 for q in self.sq_error},
            cx_error={p: 0.0 for p in self.cx_error},
            coherence_ns={q: math.inf for q in self.coherence_ns},
        )

    def without_readout_noise(self) -> "NoiseModel":
        return replace(self, readout={q: (0.0, 0.0) for q in self.readout})


def _dephase_prob(gap_ns: float, coherence_ns: float) -> float:
    return (1.0 - math.exp(-gap_ns / coherence_ns)) / 2.0


def _event_stream(c: TimedCircuit, noise: NoiseModel):
    """Noisy events in schedule order: each gate preceded by the idle
    dephasing its wires accumulated, plus trailing idles out to the makespan.

    Yields ("idle", (v,), p_z), ("h", (v,), p_err), ("cx", (c, t), p_err)
    with wires in graph-vertex space.
    """
    vmap = c.vertex_of()
    last: Dict[int, Fraction] = {v: Fraction(0) for v in range(c.n)}
    events = []
    for g in c.gates:
        vs = tuple(vmap[q] for q in g.wires)
        for q, v in zip(g.wires, vs):
            gap = g.start - last[v]
            if gap > 0:
                events.append(("idle", (v,), _dephase_prob(float(gap), noise.coherence_ns[q])))
            last[v] = g.end
        if g.kind == "h":
            events.append(("h", vs, noise.sq_error[g.wires[0]]))
        else:
            a, b = g.wires
            events.append(("cx", vs, noise.cx_error[(min(a, b), max(a, b))]))
    for v in range(c.n):
        gap = c.makespan - last[v]
        if gap > 0:
            q = c.placement[v]
            events.append(("idle", (v,), _dephase_prob(float(gap), noise.coherence_ns[q])))
    return events


def _rotation_ops(element: PauliString) -> List[Tuple[str, int]]:
    """Basis change mapping each X to Z (H) and each Y to Z (S-dagger, H)."""
    ops: List[Tuple[str, int]] = []
    for v in range(element.n):
        xb = (element.x_mask >> v) & 1
        zb = (element.z_mask >> v) & 1
        if xb and zb:
            ops.append(("sdg", v))
            ops.append(("h", v))
        elif xb:
            ops.append(("h", v))
    return ops


def _rotated_tableau(tab: Tableau, ops: Sequence[Tuple[str, int]]) -> Tableau:
    t = tab.copy()
    for kind, v in ops:
        getattr(t, kind)(v)
    return t


def _outcome_sampler(tab: Tableau):
    """All-qubit Z-measurement distribution of a stabilizer state.

    Outcomes are uniform over an affine subspace: returns (b0, basis) with
    b0 a particular outcome and basis rows spanning the free directions.
    """
    x, z, r = tab.x.copy(), tab.z.copy(), tab.r.copy()
    n = tab.n
    row = 0
    for j in range(n):  # eliminate the X block; leftover rows are pure Z
        k = next((k for k in range(row, n) if x[k, j]), None)
        if k is None:
            continue
        if k != row:
            for arr in (x, z):
                arr[[row, k]] = arr[[k, row]]
            r[[row, k]] = r[[k, row]]
        for other in range(n):
            if other != row and x[other, j]:
                _rowsum(x, z, r, other, row)
        row += 1
    a_mat = z[row:].astype(np.uint8)
    c_vec = r[row:].astype(np.uint8)

    # Solve a_mat @ b = c_vec over GF(2).
    a = a_mat.copy()
    c = c_vec.copy()
    m = a.shape[0]
    pivots: List[int] = []
    rr = 0
    for col in range(n):
        k = next((k for k in range(rr, m) if a[k, col]), None)
        if k is None:
            continue
        a[[rr, k]] = a[[k, rr]]
        c[[rr, k]] = c[[k, rr]]
        for other in range(m):
            if other != rr and a[other, col]:
                a[other] ^= a[rr]
                c[other] ^= c[rr]
        pivots.append(col)
        rr += 1
    if any(c[k] for k in range(rr, m)):
        raise AssertionError("inconsistent stabilizer measurement constraints")
    b0 = np.zeros(n, dtype=np.uint8)
    for k, col in enumerate(pivots):
        b0[col] = c[k]
    free = [j for j in range(n) if j not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for bi, fj in enumerate(free):
        basis[bi, fj] = 1
        for k, col in enumerate(pivots):
            basis[bi, col] = a[k, fj]
    return b0, basis


def _mitigation_weights(p01: float, p10: float) -> Tuple[float, float]:
    """Per-qubit weights w(observed bit) with E[w] = (-1)^(true bit)."""
    det = 1.0 - p01 - p10
    if det <= 0:
        raise ValidationError(
            f"readout confusion with p01={p01}, p10={p10} is not invertible"
        )
    return (1.0 + p01 - p10) / det, -(1.0 - p01 + p10) / det


@dataclass(frozen=True)
class ElementEstimate:
    label: str
    raw: float
    mitigated: Optional[float]
    stderr_raw: float
    stderr_mitigated: Optional[float]


@dataclass(frozen=True)
class NoisyEstimate:
    """Stabilizer-sampling fidelity: raw and (optionally) readout-mitigated."""

    fidelity_raw: float
    fidelity_mitigated: Optional[float]
    stderr_raw: float
    stderr_mitigated: Optional[float]
    shots: int
    seed: int
    analytic: bool
    elements: Tuple[ElementEstimate, ...]


def _frame_apply_gate(fx, fz, kind: str, wires: Tuple[int, ...]) -> None:
    if kind == "h":
        v = wires[0]
        tmp = fx[:, v].copy()
        fx[:, v] = fz[:, v]
        fz[:, v] = tmp
    elif kind == "sdg":
        v = wires[0]
        fz[:, v] ^= fx[:, v]
    else:  # cx
        cq, tq = wires
        fx[:, tq] ^= fx[:, cq]
        fz[:, cq] ^= fz[:, tq]


def _frame_noise(fx, fz, rng, kind: str, wires: Tuple[int, ...], p: float) -> None:
    if p <= 0:
        return
    shots = fx.shape[0]
    if kind == "idle":
        hit = rng.random(shots) < p
        fz[hit, wires[0]] ^= 1
    elif kind == "h":
        u = rng.random(shots)
        v = wires[0]
        fx[u < 2 * p / 3, v] ^= 1  # X or Y component
        fz[(u >= p / 3) & (u < p), v] ^= 1  # Y or Z component
    else:  # cx: uniform over the 15 non-identity two-qubit Paulis
        hit = rng.random(shots) < p
        idx = rng.integers(1, 16, size=shots)
        idx = np.where(hit, idx, 0)
        a, b = wires
        fx[:, a] ^= ((idx >> 0) & 1).astype(np.uint8)
        fz[:, a] ^= ((idx >> 1) & 1).astype(np.uint8)
        fx[:, b] ^= ((idx >> 2) & 1).astype(np.uint8)
        fz[:, b] ^= ((idx >> 3) & 1).astype(np.uint8)


def _element_mc(
    c: TimedCircuit,
    noise: NoiseModel,
    events,
    ideal_tab: Tableau,
    element: PauliString,
    shots: int,
    rng,
    mitigate: bool,
) -> ElementEstimate:
    n = c.n
    ops = _rotation_ops(element)
    rot_tab = _rotated_tableau(ideal_tab, ops)
    b0, basis = _outcome_sampler(rot_tab)

    fx = np.zeros((shots, n), dtype=np.uint8)
    fz = np.zeros((shots, n), dtype=np.uint8)
    for kind, wires, p in events:
        if kind != "idle":
            _frame_apply_gate(fx, fz, kind, wires)
        _frame_noise(fx, fz, rng, kind, wires, p)
    for kind, v in ops:  # basis rotations are treated as noiseless
        _frame_apply_gate(fx, fz, kind, (v,))

    if basis.shape[0]:
        u = rng.integers(0, 2, size=(shots, basis.shape[0]), dtype=np.uint8)
        bits = (u @ basis) % 2
        bits ^= b0
    else:
        bits = np.broadcast_to(b0, (shots, n)).copy()
    bits ^= fx  # frame X components flip Z-measurement outcomes

    support = [v for v in range(n) if (element.support() >> v) & 1]
    parity = np.zeros(shots, dtype=np.uint8)
    weights = np.ones(shots, dtype=np.float64) if mitigate else None
    for v in support:
        q = c.placement[v]
        p01, p10 = noise.readout[q]
        b = bits[:, v].astype(bool)
        flip = rng.random(shots) < np.where(b, p10, p01)
        obs = b ^ flip
        parity ^= obs
        if mitigate:
            w0, w1 = _mitigation_weights(p01, p10)
            weights *= np.where(obs, w1, w0)
    raw_vals = element.sign * (1.0 - 2.0 * parity.astype(np.float64))

    def summarize(vals):
        err = float(vals.std(ddof=1) / math.sqrt(shots)) if shots > 1 else 0.0
        return float(vals.mean()), err

    raw, err_raw = summarize(raw_vals)
    if mitigate:
        mit, err_mit = summarize(element.sign * weights)
    else:
        mit, err_mit = None, None
    return ElementEstimate(element.label, raw, mit, err_raw, err_mit)


def _element_analytic(
    c: TimedCircuit,
    noise: NoiseModel,
    ideal_tab: Tableau,
    element: PauliString,
    mitigate: bool,
) -> ElementEstimate:
    """Closed-form expectation under readout confusion alone.

    Gate and idle noise are ignored in this mode; exact for readout-limited
    noise models.
    """
    n = c.n
    rot_tab = _rotated_tableau(ideal_tab, _rotation_ops(element))
    rref = _rref_with_phases(rot_tab)
    support = [v for v in range(n) if (element.support() >> v) & 1]

    def z_moment(subset: Tuple[int, ...]) -> float:
        pz = np.zeros(n, dtype=np.uint8)
        for v in subset:
            pz[v] = 1
        phase = _member_phase(rref, np.zeros(n, dtype=np.uint8), pz)
        if phase is None:
            return 0.0
        return -1.0 if phase else 1.0

    raw = 0.0
    for mask in range(1 << len(support)):
        term = 1.0
        subset = []
        for idx, v in enumerate(support):
            p01, p10 = noise.readout[c.placement[v]]
            if (mask >> idx) & 1:
                subset.append(v)
                term *= 1.0 - p01 - p10
            else:
                term *= p10 - p01
        if term != 0.0:
            raw += term * z_moment(tuple(subset))
    raw *= element.sign
    mit = element.sign * z_moment(tuple(support)) if mitigate else None
    return ElementEstimate(element.label, raw, mit, 0.0, 0.0 if mitigate else None)


def estimate_fidelity(
    c: TimedCircuit,
    noise: NoiseModel,
    shots: int = 4096,
    seed: int = 0,
    mitigate: bool = False,
    analytic: bool = False,
) -> NoisyEstimate:
    """Fidelity with the target graph state via stabilizer sampling.

    One measurement setting per stabilizer element; fidelity is the mean of
    the 2^n element expectations. Each element draws from an independent RNG
    stream spawned from the seed, so results are reproducible bit-for-bit and
    per-element values do not shift when others are recomputed.
    """
    if shots < 1:
        raise ValidationError(f"shots must be >= 1, got {shots}")
    group = stabilizer_group(c.graph)
    ideal_tab = simulate_ideal(c)
    events = _event_stream(c, noise)

    elements: List[ElementEstimate] = []
    for k, element in enumerate(group):
        if element.support() == 0:
            one = float(element.sign)
            elements.append(
                ElementEstimate(element.label, one, one if mitigate else None, 0.0, 0.0 if mitigate else None)
            )
        elif analytic:
            elements.append(_element_analytic(c, noise, ideal_tab, element, mitigate))
        else:
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
            elements.append(
                _element_mc(c, noise, events, ideal_tab, element, shots, rng, mitigate)
            )

    m = len(elements)
    raw = sum(e.raw for e in elements) / m
    err_raw = math.sqrt(sum(e.stderr_raw**2 for e in elements)) / m
    if mitigate:
        mit = sum(e.mitigated for e in elements) / m
        err_mit = math.sqrt(sum(e.stderr_mitigated**2 for e in elements)) / m
    else:
        mit, err_mit = None, None
    return NoisyEstimate(
        fidelity_raw=raw,
        fidelity_mitigated=mit,
        stderr_raw=err_raw,
        stderr_mitigated=err_mit,
        shots=shots,
        seed=seed,
        analytic=analytic,
        elements=tuple(elements),
    )


# ---------------------------------------------------------------------------
# Dense density-matrix oracle (small n)

_I2 = np.eye(2, dtype=complex)
_H2 = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X2 = np.array([[0, 1], [1, 0]], dtype=complex)
_Y2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z2 = np.array([[1, 0], [0, -1]], dtype=complex)


def _embed_1q(op: np.ndarray, q: int, n: int) -> np.ndarray:
    full = np.array([[1.0 + 0j]])
    for j in range(n - 1, -1, -1):  # qubit 0 on the least significant bit
        full = np.kron(full, op if j == q else _I2)
    return full


def _embed_cx(cq: int, tq: int, n: int) -> np.ndarray:
    dim = 1 << n
    u = np.zeros((dim, dim), dtype=complex)
    for m in range(dim):
        m2 = m ^ (1 << tq) if (m >> cq) & 1 else m
        u[m2, m] = 1.0
    return u


def _graph_statevector(c: TimedCircuit) -> np.ndarray:
    n = c.n
    dim = 1 << n
    psi = np.full(dim, 1.0 / math.sqrt(dim), dtype=complex)  # H on every qubit
    for u, v in c.graph.sorted_edges():
        for m in range(dim):
            if (m >> u) & 1 and (m >> v) & 1:
                psi[m] = -psi[m]
    return psi


def density_oracle(c: TimedCircuit, noise: NoiseModel) -> float:
    """Exact <G|rho|G> by dense channel evolution, replaying the identical
    event order the Monte Carlo estimator uses (readout errors excluded: the
    sampling estimator's mitigated value is unbiased for this quantity)."""
    n = c.n
    if n > DENSITY_CAP:
        raise CapExceededError(f"density oracle supports n <= {DENSITY_CAP}, got {n}")
    dim = 1 << n
    paulis = {
        v: (_embed_1q(_X2, v, n), _embed_1q(_Y2, v, n), _embed_1q(_Z2, v, n))
        for v in range(n)
    }

    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    for kind, wires, p in _event_stream(c, noise):
        if kind == "idle":
            z = paulis[wires[0]][2]
            rho = (1 - p) * rho + p * (z @ rho @ z)
            continue
        if kind == "h":
            u = _embed_1q(_H2, wires[0], n)
        else:
            u = _embed_cx(wires[0], wires[1], n)
        rho = u @ rho @ u.conj().T
        if p > 0:
            if kind == "h":
                x, y, z = paulis[wires[0]]
                rho = (1 - p) * rho + (p / 3) * (x @ rho @ x + y @ rho @ y + z @ rho @ z)
            else:
                mixed = np.zeros_like(rho)
                eye = np.eye(dim, dtype=complex)
                ops_a = (eye,) + paulis[wires[0]]
                ops_b = (eye,) + paulis[wires[1]]
                for ia in range(4):
                    for ib in range(4):
                        if ia == 0 and ib == 0:
                            continue
                        op = ops_a[ia] @ ops_b[ib]
                        mixed += op @ rho @ op.conj().T
                rho = (1 - p) * rho + (p / 15) * mixed

    psi = _graph_statevector(c)
    return float(np.real(psi.conj() @ rho @ psi))
