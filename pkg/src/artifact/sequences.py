"""Dynamical-decoupling schedules and protected evolution.

A :class:`PulseSchedule` describes one cycle: instantaneous pulses at given
offsets plus the free-evolution gaps between them. Generators cover
equidistant (CPMG), Uhrig (UDD), super-Zeno, nested UDD (NUDD), the
symmetric XY family and KDD. :func:`simulate_protected` interleaves those
pulses with noisy free evolution.

The module also carries a small pure-dephasing toy bath evaluated in
extended precision. Decoupling suppresses errors as T**(2N+2), which drops
below double-precision resolution quickly, so the order-scaling checks use
mpmath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from .channels import KrausChannel
from .dynamics import LindbladModel, lindblad_propagator
from .qcore import (
    ArrayLike,
    DensityMatrix,
    Hamiltonian,
    PureState,
    SX,
    SZ,
    as_array,
    expm_hermitian,
    rotation_pulse,
    tensor_product,
)

UNITARY_TOL = 1e-12
ROTATION_PREFIX = "PI("

#: optimized super-Zeno interval parameter (3 - sqrt 5)/8
SZ_BETA = (3.0 - math.sqrt(5.0)) / 8.0

#: NUDD interval multipliers in units of 1/64
NUDD_DELTA_UNITS = (1, 2, 1, 2, 4, 2, 1, 2, 1, 2, 4, 2, 4, 8, 4, 2, 4, 2, 1, 2, 1, 2, 4, 2, 1, 2, 1)
NUDD_BETA = 1.0 / 64.0
NUDD_PULSE_ORDER = tuple(("X0 X0 X1 X0 X0 X1 X0 X0 XPHI " * 3).split()[:-1])

KDD_PHASES_DEG = (30.0, 0.0, 90.0, 0.0, 30.0, 120.0, 90.0, 180.0, 90.0, 120.0)


@dataclass(frozen=True)
class PulseEvent:
    time: float
    label: str
    phase: float = 0.0
    targets: Tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    cycle_duration: float
    events: Tuple[PulseEvent, ...]
    operator_table: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        events = tuple(sorted(self.events, key=lambda e: e.time))
        tol = 1e-12 * max(1.0, self.cycle_duration)
        for e in events:
            if e.time < -tol or e.time > self.cycle_duration + tol:
                raise ValueError(f"event at {e.time} lies outside [0, {self.cycle_duration}]")
            if e.label not in self.operator_table:
                raise ValueError(f"label {e.label!r} missing from operator table")
        table = {}
        dims = set()
        for k, u in self.operator_table.items():
            u = np.asarray(u, dtype=complex)
            if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > UNITARY_TOL:
                raise ValueError(f"operator {k!r} is not unitary")
            table[k] = u
            dims.add(u.shape[0])
        if len(dims) > 1:
            raise ValueError("operators of mixed dimension")
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "operator_table", table)

    @property
    def dim(self) -> Optional[int]:
        return next(iter(self.operator_table.values())).shape[0] if self.operator_table else None

    @property
    def times(self) -> List[float]:
        return [e.time for e in self.events]

    def intervals(self) -> List[float]:
        """Free-evolution gaps, including the leading and trailing ones."""
        pts = [0.0] + self.times + [self.cycle_duration]
        return [b - a for a, b in zip(pts[:-1], pts[1:])]

    def pulse_counts(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for e in self.events:
            out[e.label] = out.get(e.label, 0) + 1
        return out

    def operator(self, event: PulseEvent, flip_angle_error: float = 0.0) -> np.ndarray:
        """Pulse unitary; with a flip-angle error eps every pi becomes pi (1 + eps)."""
        u = self.operator_table[event.label]
        if flip_angle_error == 0.0:
            return u
        if event.label.startswith(ROTATION_PREFIX):
            n = int(round(math.log2(u.shape[0])))
            r = rotation_pulse(math.pi * (1 + flip_angle_error), event.phase)
            mats = [r if q in event.targets else np.eye(2) for q in range(1, n + 1)]
            return tensor_product(*mats)
        # reflections I - 2P = exp(i pi P); over-rotate the generator
        w, v = np.linalg.eigh(0.5 * (u + u.conj().T))
        minus = (w < 0).astype(float)
        return (v * np.exp(1j * math.pi * (1 + flip_angle_error) * minus)) @ v.conj().T

    def cycle_unitary_ideal(self) -> np.ndarray:
        """Product of the pulses alone (no free evolution), latest on the left."""
        u = np.eye(self.dim, dtype=complex)
        for e in self.events:
            u = self.operator_table[e.label] @ u
        return u

    def repeated(self, n: int) -> "PulseSchedule":
        """The schedule concatenated ``n`` times into one longer cycle."""
        ev = [PulseEvent(e.time + k * self.cycle_duration, e.label, e.phase, e.targets) for k in range(n) for e in self.events]
        return PulseSchedule(n * self.cycle_duration, tuple(ev), self.operator_table)

    def extended(self, env_dim: int) -> "PulseSchedule":
        """Same timing with every operator padded by an identity on an environment factor."""
        table = {k: np.kron(u, np.eye(env_dim)) for k, u in self.operator_table.items()}
        return PulseSchedule(self.cycle_duration, self.events, table)

    def to_text(self) -> str:
        lines = [f"# cycle_duration\t{self.cycle_duration!r}", "# time_s\tlabel\tphase_rad\ttargets"]
        for e in self.events:
            lines.append(f"{e.time!r}\t{e.label}\t{e.phase!r}\t{','.join(str(q) for q in e.targets)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, operator_table: Dict[str, np.ndarray]) -> "PulseSchedule":
        cycle = None
        events = []
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split("\t")
                if parts[0] == "cycle_duration":
                    cycle = float(parts[1])
                continue
            t, label, phase, targets = line.split("\t")
            tg = tuple(int(x) for x in targets.split(",") if x)
            events.append(PulseEvent(float(t), label, float(phase), tg))
        if cycle is None:
            raise ValueError("missing cycle_duration header")
        return cls(cycle, tuple(events), operator_table)


@dataclass(frozen=True, eq=False)
class SubspaceSpec:
    n_qubits: int
    basis_states_P: Tuple[np.ndarray, ...]

    def __post_init__(self):
        vecs = tuple(np.asarray(as_array(v), dtype=complex).ravel() for v in self.basis_states_P)
        if not vecs:
            raise ValueError("subspace needs at least one basis vector")
        for v in vecs:
            if v.size != 2**self.n_qubits:
                raise ValueError("basis vector length does not match n_qubits")
        g = np.array([[np.vdot(a, b) for b in vecs] for a in vecs])
        if np.max(np.abs(g - np.eye(len(vecs)))) > 1e-12:
            raise ValueError("basis states are not orthonormal")
        object.__setattr__(self, "basis_states_P", vecs)

    @classmethod
    def from_labels(cls, *labels: str) -> "SubspaceSpec":
        n = len(labels[0])
        vecs = []
        for lab in labels:
            v = np.zeros(2**n, dtype=complex)
            v[int(lab, 2)] = 1.0
            vecs.append(v)
        return cls(n, tuple(vecs))

    def projector(self) -> np.ndarray:
        return sum(np.outer(v, v.conj()) for v in self.basis_states_P)

    def complement(self) -> "SubspaceSpec":
        """Orthonormal basis of the orthogonal complement."""
        p = self.projector()
        w, v = np.linalg.eigh(np.eye(p.shape[0]) - p)
        cols = [v[:, i] for i in range(len(w)) if w[i] > 0.5]
        return SubspaceSpec(self.n_qubits, tuple(cols))


# ---------------------------------------------------------------------------
# timing generators


def udd_times(n_pulses: int, total_t: float) -> List[float]:
    """Uhrig pulse times T sin^2(j pi / (2N + 2)), j = 1..N."""
    if n_pulses < 1:
        raise ValueError("need at least one pulse")
    if total_t <= 0:
        raise ValueError("total time must be positive")
    return [total_t * math.sin(j * math.pi / (2 * n_pulses + 2)) ** 2 for j in range(1, n_pulses + 1)]


def _rotation_table_entry(phase: float, targets: Sequence[int], n_qubits: int) -> Tuple[str, np.ndarray]:
    label = f"{ROTATION_PREFIX}{math.degrees(phase):g})"
    mats = [rotation_pulse(math.pi, phase) if q in targets else np.eye(2) for q in range(1, n_qubits + 1)]
    return label, tensor_product(*mats)


def _pi_pulse_schedule(times: Sequence[float], phases: Sequence[float], cycle: float, n_qubits: int, targets) -> PulseSchedule:
    targets = tuple(targets) if targets else tuple(range(1, n_qubits + 1))
    table, events = {}, []
    for t, ph in zip(times, phases):
        label, u = _rotation_table_entry(ph, targets, n_qubits)
        table[label] = u
        events.append(PulseEvent(t, label, ph, targets))
    return PulseSchedule(cycle, tuple(events), table)


def udd_schedule(n_pulses: int, total_t: float, axis_phase: float = 0.0, n_qubits: int = 1, targets=None) -> PulseSchedule:
    times = udd_times(n_pulses, total_t)
    return _pi_pulse_schedule(times, [axis_phase] * n_pulses, total_t, n_qubits, targets)


def cpmg_schedule(n_pulses: int, tau: float, axis_phase: float = 0.0, n_qubits: int = 1, targets=None) -> PulseSchedule:
    """pi pulses at (2k+1) tau / 2 for k = 0..n-1 in a cycle of n tau."""
    if n_pulses < 1 or tau <= 0:
        raise ValueError("need n >= 1 and tau > 0")
    times = [(2 * k + 1) * tau / 2 for k in range(n_pulses)]
    return _pi_pulse_schedule(times, [axis_phase] * n_pulses, n_pulses * tau, n_qubits, targets)


def equal_spacing_schedule(n_pulses: int, total_t: float, operator: np.ndarray, label: str = "J") -> PulseSchedule:
    """n identical pulses splitting ``total_t`` into n + 1 equal intervals."""
    times = [total_t * k / (n_pulses + 1) for k in range(1, n_pulses + 1)]
    return PulseSchedule(total_t, tuple(PulseEvent(t, label) for t in times), {label: operator})


def schedule_from_intervals(fractions: Sequence[float], labels: Sequence[str], total_t: float, table: Dict[str, np.ndarray]) -> PulseSchedule:
    """Pulses ``labels[i]`` placed after the interval fractions[i] * total_t."""
    if len(fractions) != len(labels) + 1:
        raise ValueError("need one more interval than pulses")
    t, events = 0.0, []
    for f, lab in zip(fractions[:-1], labels):
        t += f * total_t
        events.append(PulseEvent(t, lab))
    return PulseSchedule(total_t, tuple(events), table)


# ---------------------------------------------------------------------------
# subspace protection


def build_J(subspace: SubspaceSpec) -> np.ndarray:
    """Reflection J = Q - P = I - 2P about the protected subspace."""
    p = subspace.projector()
    return np.eye(p.shape[0], dtype=complex) - 2 * p


def super_zeno_intervals() -> List[float]:
    return [SZ_BETA, 0.25, 0.5 - 2 * SZ_BETA, 0.25, SZ_BETA]


def super_zeno_schedule(subspace: SubspaceSpec, t: float) -> PulseSchedule:
    """Four J pulses separated by the optimized intervals beta, 1/4, 1/2 - 2 beta, 1/4, beta."""
    if t <= 0:
        raise ValueError("t must be positive")
    return schedule_from_intervals(super_zeno_intervals(), ["J"] * 4, t, {"J": build_J(subspace)})


def super_zeno_recursive_times(m: int, t: float) -> List[float]:
    """J-pulse times of the recursive sequence U_m(t).

    U_{m+1}(t) = U_m(t/2) J U_m(t/2) for even m and U_m(t/2) U_m(t/2) for odd m.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return []
    inner = super_zeno_recursive_times(m - 1, t / 2)
    mid = [t / 2] if (m - 1) % 2 == 0 else []
    return inner + mid + [x + t / 2 for x in inner]


def super_zeno_pulse_count(m: int) -> int:
    return (2 ** (m + 1) - 2) // 3 if m % 2 == 0 else (2 ** (m + 1) - 1) // 3


def super_zeno_recursive(m: int, t: float, subspace: SubspaceSpec) -> PulseSchedule:
    times = super_zeno_recursive_times(m, t)
    return PulseSchedule(t, tuple(PulseEvent(x, "J") for x in times), {"J": build_J(subspace)})


def nudd_operators() -> Dict[str, np.ndarray]:
    """X0 = I - 2|01><01|, X1 = I - 2|10><10|, XPHI = I - (|01>+|10>)(<01|+<10|)."""
    e01 = np.zeros(4, dtype=complex)
    e01[1] = 1
    e10 = np.zeros(4, dtype=complex)
    e10[2] = 1
    s = e01 + e10
    eye = np.eye(4, dtype=complex)
    return {
        "X0": eye - 2 * np.outer(e01, e01),
        "X1": eye - 2 * np.outer(e10, e10),
        "XPHI": eye - np.outer(s, s),
    }


def nudd_deltas() -> List[float]:
    return [u * NUDD_BETA for u in NUDD_DELTA_UNITS]


def nudd_schedule(t: float) -> PulseSchedule:
    """Three-layer nested UDD (second order per layer) on two qubits."""
    if t <= 0:
        raise ValueError("t must be positive")
    return schedule_from_intervals(nudd_deltas(), list(NUDD_PULSE_ORDER), t, nudd_operators())


def nudd_times_nested(n: int, total_t: float) -> Tuple[List[float], List[List[float]], List[List[List[float]]]]:
    """Outer T_j, middle T_{j,k} and inner T_{j,k,l} UDD times of order n.

    Each layer places UDD_n times inside every interval of the layer above,
    with the interval endpoints T_0 = 0 and T_{n+1} = total_t.
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    s = [math.sin(j * math.pi / (2 * n + 2)) ** 2 for j in range(1, n + 1)]

    def inside(a: float, b: float) -> List[float]:
        return [a + (b - a) * x for x in s]

    outer = [total_t * x for x in s]
    ends = [0.0] + outer + [total_t]
    middle = [inside(ends[j], ends[j + 1]) for j in range(n + 1)]
    inner = []
    for j in range(n + 1):
        pts = [ends[j]] + middle[j] + [ends[j + 1]]
        inner.append([inside(pts[k], pts[k + 1]) for k in range(n + 1)])
    return outer, middle, inner


def xy_schedule(variant: str, tau: float, n_qubits: int = 1, targets=None) -> PulseSchedule:
    """Symmetric XY4/XY8/XY16 cycles with pulses centred in slots of length tau."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    xy4 = [0.0, math.pi / 2, 0.0, math.pi / 2]
    xy8 = xy4 + xy4[::-1]
    phases = {"XY4S": xy4, "XY8S": xy8, "XY16S": xy8 + [p + math.pi for p in xy8]}.get(variant.upper())
    if phases is None:
        raise ValueError(f"unknown XY variant {variant!r}")
    times = [(k + 0.5) * tau for k in range(len(phases))]
    return _pi_pulse_schedule(times, phases, len(phases) * tau, n_qubits, targets)


def kdd_schedule(tau_k: float, n_qubits: int = 1, targets=None) -> PulseSchedule:
    """KDD_xy: two phase-shifted five-pulse blocks, applied twice (20 pulses)."""
    if tau_k <= 0:
        raise ValueError("tau_k must be positive")
    phases = [math.radians(p) for p in KDD_PHASES_DEG] * 2
    times = [(k + 0.5) * tau_k for k in range(len(phases))]
    return _pi_pulse_schedule(times, phases, len(phases) * tau_k, n_qubits, targets)


def free_schedule(t: float, dim: int) -> PulseSchedule:
    """Cycle of length t with no pulses (unprotected reference)."""
    return PulseSchedule(t, (), {"I": np.eye(dim, dtype=complex)})


# ---------------------------------------------------------------------------
# simulation

Noise = Union[None, LindbladModel, Callable[[float], KrausChannel], np.ndarray, Hamiltonian]


def _unitary_super(u: np.ndarray) -> np.ndarray:
    return np.kron(u, u.conj())


def _segment_super(noise: Noise, gap: float, dim: int) -> np.ndarray:
    if noise is None or gap == 0.0:
        return np.eye(dim * dim, dtype=complex)
    if isinstance(noise, LindbladModel):
        if not noise.lindblad_ops:
            return _unitary_super(expm_hermitian(noise.h, gap))
        return lindblad_propagator(noise, gap)
    if isinstance(noise, (np.ndarray, Hamiltonian)):
        return _unitary_super(expm_hermitian(as_array(noise), gap))
    ch = noise(gap)
    return ch.superoperator()


def cycle_superoperator(schedule: PulseSchedule, noise: Noise, dim: int, flip_angle_error: float = 0.0) -> np.ndarray:
    """Row-stacking superoperator for one full cycle."""
    cache: Dict[float, np.ndarray] = {}

    def seg(gap: float) -> np.ndarray:
        key = round(gap, 15)
        if key not in cache:
            cache[key] = _segment_super(noise, gap, dim)
        return cache[key]

    s = np.eye(dim * dim, dtype=complex)
    gaps = schedule.intervals()
    for gap, e in zip(gaps[:-1], schedule.events):
        if gap > 0:
            s = seg(gap) @ s
        s = _unitary_super(schedule.operator(e, flip_angle_error)) @ s
    if gaps[-1] > 0:
        s = seg(gaps[-1]) @ s
    return s


def simulate_protected(
    schedule: PulseSchedule,
    rho0: ArrayLike,
    noise: Noise = None,
    n_cycles: int = 1,
    flip_angle_error: float = 0.0,
) -> List[DensityMatrix]:
    """Alternate noisy free evolution and instantaneous pulses.

    ``noise`` is one of: ``None`` (no free evolution), a Hamiltonian array
    (unitary gaps), a :class:`LindbladModel` (integrated across each gap) or
    a factory ``duration -> KrausChannel``. Returns the state at the end of
    each of the ``n_cycles`` cycles.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    m = as_array(rho0)
    d = m.shape[0]
    if schedule.dim is not None and schedule.dim != d:
        raise ValueError(f"schedule acts on dimension {schedule.dim}, state has {d}")
    s = cycle_superoperator(schedule, noise, d, flip_angle_error)
    v = m.reshape(-1)
    out = []
    for _ in range(n_cycles):
        v = s @ v
        out.append(DensityMatrix.from_array(v.reshape(d, d)))
    return out


def leakage_fraction(rho: ArrayLike, subspace_Q: SubspaceSpec) -> float:
    """Population Tr(P_Q rho) found in the subspace Q."""
    m = as_array(rho)
    p = subspace_Q.projector()
    if p.shape != m.shape:
        raise ValueError("state and subspace dimensions differ")
    return float(np.real(np.trace(p @ m)))


# ---------------------------------------------------------------------------
# toy baths


def toy_dephasing_hamiltonian(seed: int = 7, bath_dim: int = 4) -> np.ndarray:
    """H = I x C + sigma_z x Z on (qubit, bath), C and Z random Hermitian, ||H|| = 1."""
    rng = np.random.default_rng(seed)

    def herm() -> np.ndarray:
        a = rng.normal(size=(bath_dim, bath_dim)) + 1j * rng.normal(size=(bath_dim, bath_dim))
        return (a + a.conj().T) / 2

    c, z = herm(), herm()
    h = np.kron(np.eye(2), c) + np.kron(SZ, z)
    return h / np.linalg.norm(h, 2)


def toy_three_axis_hamiltonian(seed: int = 11, n_system: int = 2, bath_dim: int = 2) -> np.ndarray:
    """System-bath coupling along x, y and z of every system qubit plus a bath term, ||H|| = 1."""
    rng = np.random.default_rng(seed)

    def herm(d: int) -> np.ndarray:
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        return (a + a.conj().T) / 2

    ds = 2**n_system
    h = np.kron(np.eye(ds), herm(bath_dim))
    for q in range(1, n_system + 1):
        for s in (SX, SZ, np.array([[0, -1j], [1j, 0]])):
            mats = [s if k == q else np.eye(2) for k in range(1, n_system + 1)]
            h = h + np.kron(tensor_product(*mats), herm(bath_dim))
    return h / np.linalg.norm(h, 2)


def _mp_matrix(a: np.ndarray) -> mpmath.matrix:
    return mpmath.matrix([[mpmath.mpc(complex(x)) for x in row] for row in np.asarray(a)])


def subspace_leakage_highprec(
    h: np.ndarray,
    schedule: PulseSchedule,
    p_states: Sequence[np.ndarray],
    env_dim: int,
    dps: int = 50,
) -> float:
    """Leakage out of span(p_states) x environment after one cycle, in extended precision.

    The environment starts maximally mixed and the system in the uniform
    mixture of ``p_states``. The result is computed directly as the
    population outside the protected subspace, so no cancellation occurs.
    ``schedule`` operators act on the system only; they are padded with the
    environment identity here.
    """
    with mpmath.workdps(dps):
        hm = _mp_matrix(h)
        w, v = mpmath.eigh(hm)
        vh = v.transpose_conj()

        def free(t: float):
            tt = mpmath.mpf(t)
            d = mpmath.diag([mpmath.exp(-1j * w[i] * tt) for i in range(len(w))])
            return v * d * vh

        ext = schedule.extended(env_dim)
        total = mpmath.eye(h.shape[0])
        gaps = ext.intervals()
        for gap, e in zip(gaps[:-1], ext.events):
            if gap > 0:
                total = free(gap) * total
            total = _mp_matrix(ext.operator_table[e.label]) * total
        if gaps[-1] > 0:
            total = free(gaps[-1]) * total
        ds = h.shape[0] // env_dim
        # re-orthonormalize the protected basis at working precision
        basis = []
        for p in p_states:
            vec = _mp_matrix(np.asarray(p).reshape(-1, 1))
            for u in basis:
                vec = vec - u * (u.transpose_conj() * vec)[0]
            basis.append(vec / mpmath.norm(vec))
        q_sys = mpmath.eye(ds)
        for u in basis:
            q_sys = q_sys - u * u.transpose_conj()
        leak = mpmath.mpf(0)
        for u in basis:
            for b in range(env_dim):
                col = mpmath.matrix(h.shape[0], 1)
                for i in range(ds):
                    col[i * env_dim + b] = u[i]
                out = total * col
                # project each environment block onto Q
                for bb in range(env_dim):
                    blk = mpmath.matrix([out[i * env_dim + bb] for i in range(ds)])
                    proj = q_sys * blk
                    leak += sum(abs(proj[i]) ** 2 for i in range(ds))
        return float(leak / (len(p_states) * env_dim))


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


PLUS = PureState.from_amplitudes([1, 1]).amplitudes
