"""Markovian master-equation dynamics for NMR relaxation.

The integrator is fixed-step RK4 on the vectorized Lindblad generator. The
closed-form three-qubit solutions below are element-by-element expressions
for an initial GHZ, W or W-W-bar state under independent transverse
(sigma_x) and dephasing (sigma_z) Lindblad channels on every qubit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from .qcore import SX, SZ, ArrayLike, DensityMatrix, as_array, embed

DEFAULT_DT = 1e-4


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """H plus (A, kappa) pairs; the jump operator is sqrt(kappa) * A."""

    h: np.ndarray
    lindblad_ops: List[Tuple[np.ndarray, float]] = field(default_factory=list)

    def __post_init__(self):
        h = np.asarray(as_array(self.h), dtype=complex)
        ops = []
        for a, k in self.lindblad_ops:
            if k < 0:
                raise ValueError(f"Lindblad rate must be nonnegative, got {k}")
            a = np.asarray(a, dtype=complex)
            if a.shape != h.shape:
                raise ValueError("Lindblad operator shape differs from H")
            ops.append((a, float(k)))
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "lindblad_ops", ops)

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    def generator(self) -> np.ndarray:
        """Superoperator G with d vec(rho)/dt = G vec(rho), row-stacking vec."""
        d = self.dim
        eye = np.eye(d)
        g = -1j * (np.kron(self.h, eye) - np.kron(eye, self.h.T))
        for a, k in self.lindblad_ops:
            l = math.sqrt(k) * a
            ldl = l.conj().T @ l
            g += np.kron(l, l.conj()) - 0.5 * (np.kron(ldl, eye) + np.kron(eye, ldl.T))
        return g

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        """-i[H, rho] + sum (L rho L^dagger - 1/2 {L^dagger L, rho})."""
        out = -1j * (self.h @ rho - rho @ self.h)
        for a, k in self.lindblad_ops:
            l = math.sqrt(k) * a
            ldl = l.conj().T @ l
            out += l @ rho @ l.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
        return out


@dataclass(frozen=True)
class RelaxationParams:
    """Per-qubit T1 and T2 in seconds."""

    t1: Tuple[float, ...]
    t2: Tuple[float, ...]

    def __post_init__(self):
        t1, t2 = tuple(float(x) for x in self.t1), tuple(float(x) for x in self.t2)
        if len(t1) != len(t2) or not t1:
            raise ValueError("t1 and t2 need one entry per qubit")
        for a, b in zip(t1, t2):
            if a <= 0 or b <= 0:
                raise ValueError("relaxation times must be positive")
            if b > 2 * a:
                raise ValueError(f"T2 = {b} exceeds 2 T1 = {2 * a}")
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)

    @property
    def n_qubits(self) -> int:
        return len(self.t1)

    @property
    def kx(self) -> np.ndarray:
        return 1.0 / np.asarray(self.t1)

    @property
    def kz(self) -> np.ndarray:
        return 1.0 / np.asarray(self.t2)


PAPER_RELAXATION = RelaxationParams((5.42, 5.65, 4.36), (0.53, 0.55, 0.52))


def _rk4_steps(gen: np.ndarray, v: np.ndarray, h: float, n: int) -> np.ndarray:
    # the generator is linear and constant, so the RK4 update is one fixed matrix
    gh = gen * h
    g2 = gh @ gh
    g3 = g2 @ gh
    g4 = g3 @ gh
    step = np.eye(gen.shape[0]) + gh + g2 / 2 + g3 / 6 + g4 / 24
    for _ in range(n):
        v = step @ v
    return v


def _as_state(v: np.ndarray, shape) -> DensityMatrix:
    # RK4 preserves the trace exactly in exact arithmetic; over 1e4 steps the
    # rounding drift reaches ~1e-12, which is divided out here
    m = v.reshape(shape)
    tr = np.trace(m).real
    if abs(tr - 1.0) > 1e-9:
        raise FloatingPointError(f"trace drifted to {tr!r}")
    return DensityMatrix.from_array(m / tr)


def lindblad_evolve(model: LindbladModel, rho0: ArrayLike, t: float, dt: float = DEFAULT_DT) -> DensityMatrix:
    """Integrate the master equation from 0 to ``t`` with fixed-step RK4.

    The step is shrunk slightly so that an integer number of steps lands on
    ``t`` exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    m = as_array(rho0)
    if t == 0:
        return DensityMatrix.from_array(m)
    n = max(1, math.ceil(t / dt - 1e-9))
    v = _rk4_steps(model.generator(), m.reshape(-1), t / n, n)
    return _as_state(v, m.shape)


def lindblad_propagator(model: LindbladModel, t: float, dt: float = DEFAULT_DT) -> np.ndarray:
    """Superoperator mapping vec(rho(0)) to vec(rho(t)), built from the same RK4 steps.

    Uses row-stacking vec, so ``(P @ rho.reshape(-1)).reshape(d, d)`` evolves ``rho``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    gen = model.generator()
    if t == 0:
        return np.eye(gen.shape[0], dtype=complex)
    n = max(1, math.ceil(t / dt - 1e-9))
    h = t / n
    gh = gen * h
    g2 = gh @ gh
    g3 = g2 @ gh
    step = np.eye(gen.shape[0]) + gh + g2 / 2 + g3 / 6 + g3 @ gh / 24
    return np.linalg.matrix_power(step, n)


def lindblad_trajectory(
    model: LindbladModel, rho0: ArrayLike, times: Sequence[float], dt: float = DEFAULT_DT
) -> List[DensityMatrix]:
    """States at each of the nondecreasing ``times``, integrating segment by segment."""
    m = as_array(rho0)
    gen = model.generator()
    v = m.reshape(-1).astype(complex)
    out, t_prev = [], 0.0
    for t in times:
        if t < t_prev:
            raise ValueError("times must be nondecreasing and start at >= 0")
        span = t - t_prev
        if span > 0:
            n = max(1, math.ceil(span / dt - 1e-9))
            v = _rk4_steps(gen, v, span / n, n)
        out.append(_as_state(v, m.shape))
        t_prev = t
    return out


def nmr_noise_model(params: RelaxationParams) -> LindbladModel:
    """H = 0 with L_x = sqrt(kx/2) sigma_x and L_z = sqrt(kz/2) sigma_z on every qubit."""
    n = params.n_qubits
    ops = []
    for q in range(n):
        ops.append((embed(SX, q + 1, n), params.kx[q] / 2))
        ops.append((embed(SZ, q + 1, n), params.kz[q] / 2))
    return LindbladModel(np.zeros((2**n, 2**n), dtype=complex), ops)


# ---------------------------------------------------------------------------
# closed-form three-qubit solutions


def _rates3(params: RelaxationParams):
    if params.n_qubits != 3:
        raise ValueError("the closed-form solutions are for three qubits")
    return tuple(params.kx) + tuple(params.kz)


def _fill(layout: Sequence[str], alpha: Sequence[float], beta: Sequence[float]) -> DensityMatrix:
    m = np.zeros((8, 8))
    for i, row in enumerate(layout):
        for j, tok in enumerate(row.split()):
            if tok == "0":
                continue
            idx = int(tok[1:]) - 1
            m[i, j] = alpha[idx] if tok[0] == "a" else beta[idx]
    return DensityMatrix.from_array(m)


_GHZ_LAYOUT = (
    "a1 0 0 0 0 0 0 b1",
    "0 a2 0 0 0 0 b2 0",
    "0 0 a3 0 0 b3 0 0",
    "0 0 0 a4 b4 0 0 0",
    "0 0 0 b4 a4 0 0 0",
    "0 0 b3 0 0 a3 0 0",
    "0 b2 0 0 0 0 a2 0",
    "b1 0 0 0 0 0 0 a1",
)


def ghz_analytic(params: RelaxationParams, t: float, sign: int = 1) -> DensityMatrix:
    """Decay of (|000> + sign |111>)/sqrt(2).

    ``sign=+1`` gives the matrix in its customary all-positive form;
    ``sign=-1`` flips the anti-diagonal for the GHZ_MINUS state.
    """
    k1, k2, k3, z1, z2, z3 = _rates3(params)
    e = math.exp
    p12, p13, p23 = e(-(k1 + k2) * t), e(-(k1 + k3) * t), e(-(k2 + k3) * t)
    alpha = [
        (1 + p12 + p13 + p23) / 8,
        (1 + p12 - p13 - p23) / 8,
        (1 - p12 + p13 - p23) / 8,
        (1 - p12 - p13 + p23) / 8,
    ]
    pre = e(-(k1 + k2 + k3 + z1 + z2 + z3) * t) / 8
    a, b, c, s = e(k1 * t), e(k2 * t), e(k3 * t), e((k1 + k2 + k3) * t)
    beta = [
        pre * (a + b + c + s),
        pre * (-a - b + c + s),
        pre * (-a + b - c + s),
        pre * (a - b - c + s),
    ]
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return _fill(_GHZ_LAYOUT, alpha, [sign * x for x in beta])


# Entry (1,7) (0-based (0,6)) carries beta9; beta1 sits only at (0,3).
_W_LAYOUT = (
    "a1 0 0 b1 0 b5 b9 0",
    "0 a2 b2 0 b6 0 0 b10",
    "0 b2 a3 0 b11 0 0 b7",
    "b1 0 0 a4 0 b12 b8 0",
    "0 b6 b11 0 a5 0 0 b3",
    "b5 0 0 b12 0 a6 b4 0",
    "b9 0 0 b8 0 b4 a7 0",
    "0 b10 b7 0 b3 0 0 a8",
)


def w_analytic(params: RelaxationParams, t: float) -> DensityMatrix:
    """Decay of the W state (|100> + |001> + |010>)/sqrt(3)."""
    k1, k2, k3, z1, z2, z3 = _rates3(params)
    e = math.exp
    E1, E2, E3 = e(k1 * t), e(k2 * t), e(k3 * t)
    E12, E13, E23 = e((k1 + k2) * t), e((k1 + k3) * t), e((k2 + k3) * t)
    pre = e(-(k1 + k2 + k3) * t) / 24
    alpha = [
        1 / 8 - pre * (3 + E1 + E2 - E12 + E3 - E13 - E23),
        1 / 8 + pre * (3 + E1 + E2 - E12 - E3 + E13 + E23),
        1 / 8 + pre * (3 + E1 - E2 + E12 + E3 - E13 + E23),
        1 / 8 - pre * (3 + E1 - E2 + E12 - E3 + E13 - E23),
        1 / 8 + pre * (3 - E1 + E2 + E12 + E3 + E13 - E23),
        1 / 8 + pre * (-3 + E1 - E2 - E12 + E3 + E13 - E23),
        1 / 8 + pre * (-3 + E1 + E2 + E12 - E3 - E13 - E23),
        1 / 8 - pre * (-3 + E1 + E2 + E12 + E3 + E13 + E23),
    ]
    K = k1 + k2 + k3

    def b(zsum, s1, x1, s2, x2):
        return e(-(K + zsum) * t) / 12 * (s1 + x1) * (s2 + x2)

    beta = [
        b(z2 + z3, 1, E1, -1, E23),
        b(z2 + z3, 1, E1, 1, E23),
        b(z2 + z3, -1, E1, -1, E23),
        b(z2 + z3, -1, E1, 1, E23),
        b(z1 + z3, 1, E2, -1, E13),
        b(z1 + z3, 1, E2, 1, E13),
        b(z1 + z3, -1, E2, -1, E13),
        b(z1 + z3, -1, E2, 1, E13),
        b(z1 + z2, -1, E12, 1, E3),
        b(z1 + z2, -1, E12, -1, E3),
        b(z1 + z2, 1, E12, 1, E3),
        b(z1 + z2, 1, E12, -1, E3),
    ]
    return _fill(_W_LAYOUT, alpha, beta)


# Entries (5,6) and (5,8) (1-based) carry beta14 and beta3 by the symmetry of
# the state under bit inversion; beta18 duplicates beta8 and is not placed.
_WWBAR_LAYOUT = (
    "a1 b1 b2 b3 b4 b5 b6 b7",
    "b1 a2 b8 b9 b10 b11 b12 b13",
    "b2 b8 a3 b14 b15 b16 b11 b5",
    "b3 b9 b14 a4 b17 b15 b10 b4",
    "b4 b10 b15 b17 a4 b14 b9 b3",
    "b5 b11 b16 b15 b14 a3 b8 b2",
    "b6 b12 b11 b10 b9 b8 a2 b1",
    "b7 b13 b5 b4 b3 b2 b1 a1",
)


def wwbar_analytic(params: RelaxationParams, t: float) -> DensityMatrix:
    """Decay of the equal superposition of the six kets of Hamming weight 1 or 2."""
    k1, k2, k3, z1, z2, z3 = _rates3(params)
    e = math.exp
    p12, p13, p23 = e(-(k1 + k2) * t), e(-(k1 + k3) * t), e(-(k2 + k3) * t)
    alpha = [
        (3 - p12 - p13 - p23) / 24,
        (3 - p12 + p13 + p23) / 24,
        (3 + p12 - p13 + p23) / 24,
        (3 + p12 + p13 - p23) / 24,
    ]

    def pair(xsum, zsum, s):
        # 1/12 e^{-(x + 2z)t} (s e^{zt} + e^{(x+z)t})
        return e(-(xsum + 2 * zsum) * t) / 12 * (s * e(zsum * t) + e((xsum + zsum) * t))

    K, Z = k1 + k2 + k3, z1 + z2 + z3

    def triple(s1, s2, s3, s4):
        return e(-(K + Z) * t) / 24 * (s1 * e(k1 * t) + s2 * e(k2 * t) + s3 * e(k3 * t) + 3 * s4 * e(K * t))

    beta = [
        pair(k1 + k2, z3, -1),
        pair(k1 + k3, z2, -1),
        pair(k2 + k3, z2 + z3, -1),
        pair(k2 + k3, z1, -1),
        pair(k1 + k3, z1 + z3, -1),
        pair(k1 + k2, z1 + z2, -1),
        -triple(1, 1, 1, -1),
        pair(k2 + k3, z2 + z3, 1),
        pair(k1 + k3, z2, 1),
        pair(k1 + k3, z1 + z3, 1),
        pair(k2 + k3, z1, 1),
        triple(1, 1, -1, 1),
        pair(k1 + k2, z1 + z2, -1),
        pair(k1 + k2, z3, 1),
        pair(k1 + k2, z1 + z2, 1),
        triple(1, -1, 1, 1),
        triple(-1, 1, 1, 1),
        pair(k2 + k3, z2 + z3, 1),
    ]
    return _fill(_WWBAR_LAYOUT, alpha, beta)


# ---------------------------------------------------------------------------
# relaxation curves and fits


def t1_inversion_recovery(m0: float, t1: float, t: float) -> float:
    """M0 (1 - 2 exp(-t/T1))."""
    if t1 <= 0:
        raise ValueError("t1 must be positive")
    return m0 * (1.0 - 2.0 * math.exp(-t / t1))


def fit_exponential_decay(samples: Sequence[Tuple[float, float]], method: str = "log") -> Tuple[float, float, float]:
    """Fit y = A exp(-r t); returns (A, r, residual).

    ``method="log"`` is ordinary least squares on log y; the residual is the
    RMS misfit in log space. ``method="linear"`` refines that estimate by
    least squares on y itself (residual is the RMS misfit of y). The linear
    variant weights points by their size, so samples near a sudden drop to
    zero do not dominate the fit.
    """
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    t = np.array([s[0] for s in samples], dtype=float)
    y = np.array([s[1] for s in samples], dtype=float)
    if np.any(y <= 0):
        raise ValueError("exponential fit requires y > 0")
    if len(np.unique(t)) != len(t):
        raise ValueError("sample times must be distinct")
    design = np.column_stack([np.ones_like(t), -t])
    coef, *_ = np.linalg.lstsq(design, np.log(y), rcond=None)
    log_a, r = coef
    if method == "log":
        res = np.log(y) - design @ coef
        return float(math.exp(log_a)), float(r), float(math.sqrt(np.mean(res**2)))
    if method != "linear":
        raise ValueError(f"unknown method {method!r}")
    sol = least_squares(lambda p: p[0] * np.exp(-p[1] * t) - y, x0=[math.exp(log_a), r], method="lm", xtol=1e-14, ftol=1e-14)
    a_fit, r_fit = sol.x
    return float(a_fit), float(r_fit), float(math.sqrt(np.mean(sol.fun**2)))


def first_zero_crossing(times: Sequence[float], values: Sequence[float], floor: float = 1e-9) -> float:
    """Earliest time at which ``values`` falls to ``floor`` or below.

    The crossing is refined by linear interpolation between the bracketing
    samples; ``nan`` is returned if the values never reach the floor.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    below = np.nonzero(v <= floor)[0]
    if below.size == 0:
        return float("nan")
    i = int(below[0])
    if i == 0:
        return float(t[0])
    t0, t1, v0, v1 = t[i - 1], t[i], v[i - 1], v[i]
    return float(t0 + (v0 - floor) * (t1 - t0) / (v0 - v1))
