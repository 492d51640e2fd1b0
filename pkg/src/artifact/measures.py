"""Entropies, correlation measures and negativities (all in bits)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .channels import BDCoefficients
from .qcore import ArrayLike, InvalidStateError, as_array, bd_eigenvalues, bell_diagonal, partial_trace, partial_transpose

CLIP_TOL = 1e-10


@dataclass(frozen=True)
class CorrelationTriple:
    total: float
    classical: float
    discord: float


def _entropy_of_eigs(lam: np.ndarray) -> float:
    lam = np.asarray(lam, dtype=float)
    if lam.min() < -CLIP_TOL:
        raise InvalidStateError(f"eigenvalue {lam.min():.3e} below -1e-10")
    lam = lam[lam > 1e-12]
    return float(-np.sum(lam * np.log2(lam)))


def von_neumann_entropy(rho: ArrayLike) -> float:
    """-Tr rho log2 rho with eigenvalues under 1e-12 treated as zero."""
    return _entropy_of_eigs(np.linalg.eigvalsh(as_array(rho)))


def mutual_information(rho: ArrayLike) -> float:
    """S(A) + S(B) - S(AB) for a two-qubit state."""
    m = as_array(rho)
    if m.shape != (4, 4):
        raise ValueError("mutual_information takes a two-qubit state")
    return von_neumann_entropy(partial_trace(m, {1})) + von_neumann_entropy(partial_trace(m, {2})) - von_neumann_entropy(m)


def _coeffs(c) -> tuple:
    if isinstance(c, BDCoefficients):
        return c.as_tuple()
    c1, c2, c3 = c
    BDCoefficients(c1, c2, c3)  # validation
    return (float(c1), float(c2), float(c3))


def bd_classical(chi: float) -> float:
    """Classical correlations of a BD state with chi = max |c_i|."""
    total = 0.0
    for sgn in (-1.0, 1.0):
        x = 1.0 + sgn * chi
        if x > 0:
            total += 0.5 * x * math.log2(x)
    return total


def bd_correlations(c) -> CorrelationTriple:
    """Closed-form total, classical and quantum (discord) correlations."""
    c1, c2, c3 = _coeffs(c)
    lam = bd_eigenvalues(c1, c2, c3)
    lam = lam[lam > 1e-15]
    total = 2.0 + float(np.sum(lam * np.log2(lam)))
    classical = bd_classical(max(abs(c1), abs(c2), abs(c3)))
    return CorrelationTriple(total, classical, total - classical)


def _conditional_entropy_grid(rho: np.ndarray, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Average entropy of A after a projective measurement on B, for arrays of angles.

    The measurement basis is |v1> = cos(t)|0> + e^{-i p} sin(t)|1> and its
    orthogonal partner |v2> = sin(t)|0> - e^{-i p} cos(t)|1>.
    """
    r = rho.reshape(2, 2, 2, 2)  # [a, i, b, j]
    ct, st, ph = np.cos(theta), np.sin(theta), np.exp(-1j * phi)
    out = np.zeros(np.broadcast(theta, phi).shape)
    for v0, v1 in ((ct + 0 * ph, ph * st), (st + 0 * ph, -ph * ct)):
        v = np.stack([v0, v1], axis=-1)
        # M[a, b] = sum_ij conj(v_i) r[a,i,b,j] v_j
        m = np.einsum("...i,aibj,...j->...ab", v.conj(), r, v)
        p = np.real(m[..., 0, 0] + m[..., 1, 1])
        safe = np.where(p > 1e-15, p, 1.0)
        # eigenvalues of the normalized 2x2 conditional state
        x = np.real(m[..., 0, 0] - m[..., 1, 1]) / safe
        y = np.abs(m[..., 0, 1]) / safe
        rad = np.clip(np.sqrt(x * x + 4 * y * y), 0.0, 1.0)
        h = np.zeros_like(rad)
        for lam in ((1 + rad) / 2, (1 - rad) / 2):
            lam_safe = np.where(lam > 1e-15, lam, 1.0)
            h -= np.where(lam > 1e-15, lam * np.log2(lam_safe), 0.0)
        out += np.where(p > 1e-15, p * h, 0.0)
    return out


def classical_correlations_numeric(rho: ArrayLike, n_theta: int = 721, n_phi: int = 1441) -> float:
    """Brute-force maximization of S(A) - sum_k p_k S(A|k) over projectors on B.

    A dense (theta, phi) grid locates the optimum; Nelder-Mead then refines it.
    Used as an independent check of the Bell-diagonal closed form.
    """
    m = as_array(rho)
    s_a = von_neumann_entropy(partial_trace(m, {1}))
    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = np.linspace(0.0, 2 * math.pi, n_phi)
    best, best_arg = math.inf, (0.0, 0.0)
    for chunk in np.array_split(thetas, max(1, n_theta // 64)):
        tt, pp = np.meshgrid(chunk, phis, indexing="ij")
        h = _conditional_entropy_grid(m, tt, pp)
        k = np.unravel_index(np.argmin(h), h.shape)
        if h[k] < best:
            best, best_arg = float(h[k]), (float(tt[k]), float(pp[k]))
    res = minimize(
        lambda x: float(_conditional_entropy_grid(m, np.array(x[0]), np.array(x[1]))),
        np.array(best_arg),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 2000},
    )
    best = min(best, float(res.fun))
    return s_a - best


def bd_correlations_vs_general(rho: ArrayLike, **grid) -> CorrelationTriple:
    """Correlations of a two-qubit state with classical part found numerically."""
    total = mutual_information(rho)
    classical = classical_correlations_numeric(rho, **grid)
    return CorrelationTriple(total, classical, total - classical)


def discord_transition_time(c0, gamma_sum: float) -> float:
    """Time at which |c1(t)| = |c1(0)| exp(-gamma_sum t) drops to |c3|; 0 if it never exceeds it."""
    c1, _, c3 = _coeffs(c0)
    if gamma_sum <= 0:
        raise ValueError("gamma_sum must be positive")
    if abs(c1) <= abs(c3):
        return 0.0
    if c3 == 0:
        return math.inf
    return math.log(abs(c1 / c3)) / gamma_sum


def entanglement_eta(rho: ArrayLike) -> float:
    """max(0, -lambda_min) of the partial transpose of a two-qubit state."""
    m = as_array(rho)
    if m.shape != (4, 4):
        raise ValueError("entanglement_eta takes a two-qubit state")
    lam = np.linalg.eigvalsh(partial_transpose(m, 2)).min()
    return float(max(0.0, -lam))


def negativity(rho: ArrayLike, qubit: int) -> float:
    """2 |lambda_min| of the partial transpose on ``qubit`` (0 if positive)."""
    lam = np.linalg.eigvalsh(partial_transpose(as_array(rho), qubit)).min()
    return float(max(0.0, -2.0 * lam))


def tripartite_negativity(rho: ArrayLike) -> float:
    """Geometric mean of the three single-qubit negativities."""
    m = as_array(rho)
    if m.shape != (8, 8):
        raise ValueError("tripartite_negativity takes a three-qubit state")
    ns = [negativity(m, q) for q in (1, 2, 3)]
    return float(np.prod(ns) ** (1.0 / 3.0))


def bd_state(c) -> np.ndarray:
    """Convenience: BD density matrix for coefficients ``c``."""
    return bell_diagonal(*_coeffs(c)).matrix
