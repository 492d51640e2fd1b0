"""Kraus-operator noise channels.

Each constructor bakes the duration into its operator set, so a channel
object is one noise process acting for one time interval. Longer evolutions
compose channels, which is exact for the semigroups built here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from .qcore import I2, SX, SY, SZ, ArrayLike, DensityMatrix, as_array, bell_diagonal, bd_eigenvalues

COMPLETENESS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KrausChannel:
    n_qubits: int
    operators: List[np.ndarray]
    label: str = ""
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        d = 2**self.n_qubits
        ops = [np.asarray(e, dtype=complex) for e in self.operators]
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        for e in ops:
            if e.shape != (d, d):
                raise ValueError(f"Kraus operator shape {e.shape} does not match {d}x{d}")
        s = sum(e.conj().T @ e for e in ops)
        err = np.max(np.abs(s - np.eye(d)))
        if err > COMPLETENESS_TOL:
            raise ValueError(f"Kraus set violates completeness by {err:.3e}")
        object.__setattr__(self, "operators", ops)

    def __call__(self, rho: ArrayLike) -> DensityMatrix:
        return apply_channel(self, rho)

    def superoperator(self) -> np.ndarray:
        """Row-stacking superoperator S with vec(E(rho)) = S vec(rho)."""
        return sum(np.kron(e, e.conj()) for e in self.operators)

    def choi(self) -> np.ndarray:
        """Choi matrix sum_ij |i><j| x E(|i><j|)."""
        d = 2**self.n_qubits
        c = np.zeros((d * d, d * d), dtype=complex)
        for i in range(d):
            for j in range(d):
                unit = np.zeros((d, d), dtype=complex)
                unit[i, j] = 1.0
                out = sum(e @ unit @ e.conj().T for e in self.operators)
                c += np.kron(unit, out)
        return c


def identity_channel(n_qubits: int = 1) -> KrausChannel:
    return KrausChannel(n_qubits, [np.eye(2**n_qubits, dtype=complex)], "identity")


def _check_nonneg(**kw: float) -> None:
    for k, v in kw.items():
        if v < 0:
            raise ValueError(f"{k} must be nonnegative, got {v}")


def phase_damping_1q(lambda_rate: float, t: float) -> KrausChannel:
    """Single-qubit dephasing with coherence factor exp(-lambda t).

    The operators are sqrt(p_I) I and sqrt(1 - p_I) Z with
    p_I = (1 + exp(-lambda t)) / 2. Writing p = 1 - exp(-lambda t) for the
    usual damping probability, this is the same map as the textbook
    two-operator form once the identity weight is written as 1 - p/2.
    """
    _check_nonneg(lambda_rate=lambda_rate, t=t)
    e = math.exp(-lambda_rate * t)
    p_i = 0.5 * (1.0 + e)
    ops = [math.sqrt(p_i) * I2, math.sqrt(1.0 - p_i) * SZ]
    return KrausChannel(1, ops, "phase_damping_1q", {"lambda": lambda_rate, "t": t, "p": 1.0 - e})


def phase_damping_2q(gamma1: float, gamma2: float, t: float) -> KrausChannel:
    """Independent dephasing of two qubits as the four-operator set E1..E4."""
    _check_nonneg(gamma1=gamma1, gamma2=gamma2, t=t)
    e1, e2 = math.exp(-gamma1 * t), math.exp(-gamma2 * t)
    a = [math.sqrt(1 + e1), math.sqrt(1 - e1)]
    b = [math.sqrt(1 + e2), math.sqrt(1 - e2)]
    ops = [
        0.5 * a[0] * b[0] * np.kron(I2, I2),
        0.5 * a[0] * b[1] * np.kron(I2, SZ),
        0.5 * a[1] * b[0] * np.kron(SZ, I2),
        0.5 * a[1] * b[1] * np.kron(SZ, SZ),
    ]
    return KrausChannel(2, ops, "phase_damping_2q", {"gamma1": gamma1, "gamma2": gamma2, "t": t})


def generalized_amplitude_damping(gamma: float, p: float = 0.5, t: float = 0.0) -> KrausChannel:
    """Energy relaxation towards populations (p, 1 - p), with a = 1 - exp(-gamma t)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    _check_nonneg(gamma=gamma, t=t)
    a = 1.0 - math.exp(-gamma * t)
    sp, sq = math.sqrt(p), math.sqrt(1.0 - p)
    ops = [
        sp * np.array([[1, 0], [0, math.sqrt(1 - a)]], dtype=complex),
        sp * np.array([[0, math.sqrt(a)], [0, 0]], dtype=complex),
        sq * np.array([[math.sqrt(1 - a), 0], [0, 1]], dtype=complex),
        sq * np.array([[0, 0], [math.sqrt(a), 0]], dtype=complex),
    ]
    return KrausChannel(1, ops, "generalized_amplitude_damping", {"gamma": gamma, "p": p, "t": t, "a": a})


def depolarizing(d_rate: float, t: float) -> KrausChannel:
    """Weights sqrt(1 - p) on I and sqrt(p/3) on X, Y, Z with p = 1 - exp(-d t).

    The resulting map equals (lambda/2) I + (1 - lambda) rho with lambda = 4p/3,
    which is only a contraction towards I/2 while lambda <= 1.
    """
    _check_nonneg(d_rate=d_rate, t=t)
    p = 1.0 - math.exp(-d_rate * t)
    lam = 4.0 * p / 3.0
    if lam > 1.0 + 1e-15:
        raise ValueError(f"lambda = {lam:.6f} > 1: duration too long for this parametrization")
    ops = [math.sqrt(1 - p) * I2] + [math.sqrt(p / 3) * s for s in (SX, SY, SZ)]
    return KrausChannel(1, ops, "depolarizing", {"d": d_rate, "t": t, "p": p, "lambda": lam})


def apply_channel(ch: KrausChannel, rho: ArrayLike) -> DensityMatrix:
    """sum_k E_k rho E_k^dagger."""
    m = as_array(rho)
    if m.shape != (2**ch.n_qubits,) * 2:
        raise ValueError("channel and state dimensions differ")
    out = sum(e @ m @ e.conj().T for e in ch.operators)
    return DensityMatrix.from_array(out)


def compose_independent(per_qubit: Sequence[KrausChannel], n_qubits: int | None = None) -> KrausChannel:
    """Tensor-product channel from one single-qubit channel per qubit."""
    if n_qubits is not None and len(per_qubit) != n_qubits:
        raise ValueError(f"expected {n_qubits} channels, got {len(per_qubit)}")
    if any(c.n_qubits != 1 for c in per_qubit):
        raise ValueError("compose_independent takes single-qubit channels")
    ops = []
    for combo in itertools.product(*[c.operators for c in per_qubit]):
        m = combo[0]
        for e in combo[1:]:
            m = np.kron(m, e)
        ops.append(m)
    return KrausChannel(len(per_qubit), ops, "independent:" + ",".join(c.label for c in per_qubit))


def sequential(first: KrausChannel, second: KrausChannel) -> KrausChannel:
    """Channel for ``first`` followed by ``second``."""
    if first.n_qubits != second.n_qubits:
        raise ValueError("dimension mismatch")
    ops = [b @ a for a in first.operators for b in second.operators]
    return KrausChannel(first.n_qubits, ops, f"{second.label}*{first.label}")


def choi_distance(a: KrausChannel, b: KrausChannel) -> float:
    """Max-abs difference of Choi matrices."""
    return float(np.max(np.abs(a.choi() - b.choi())))


# ---------------------------------------------------------------------------
# Bell-diagonal states


@dataclass(frozen=True)
class BDCoefficients:
    c1: float
    c2: float
    c3: float

    def __post_init__(self):
        lam = bd_eigenvalues(self.c1, self.c2, self.c3)
        if lam.min() < -1e-12:
            raise ValueError(f"coefficients give BD eigenvalue {lam.min():.3e}")

    def as_tuple(self) -> tuple:
        return (self.c1, self.c2, self.c3)

    def state(self) -> DensityMatrix:
        return bell_diagonal(self.c1, self.c2, self.c3)


def bd_extract(rho: ArrayLike) -> tuple:
    """c_i = Tr(rho sigma_i x sigma_i); returns a plain tuple because non-BD inputs may be unphysical as BD."""
    m = as_array(rho)
    if m.shape != (4, 4):
        raise ValueError("bd_extract needs a two-qubit state")
    return tuple(float(np.real(np.trace(m @ np.kron(s, s)))) for s in (SX, SY, SZ))


def bd_evolve_closed_form(c0: BDCoefficients, gamma1: float, gamma2: float, t: float) -> BDCoefficients:
    """Independent dephasing: c1, c2 scale by exp(-(gamma1 + gamma2) t), c3 fixed."""
    f = math.exp(-(gamma1 + gamma2) * t)
    return BDCoefficients(c0.c1 * f, c0.c2 * f, c0.c3)
