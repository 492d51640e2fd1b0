"""State tomography from Pauli expectation values.

Two estimators are provided. Linear inversion expands rho in the Pauli basis
directly and may return an indefinite matrix when the data are noisy. The
maximum-likelihood estimator parametrizes rho = T^dagger T / Tr(T^dagger T)
with T lower triangular, so every iterate is a physical state, and fits the
record by weighted least squares.

Layout of the real parameter vector t (length 4^n, n qubits, d = 2^n):
the first d entries are the real diagonal of T; after that the strictly
lower entries follow as (real, imag) pairs, ordered by distance from the
diagonal (first sub-diagonal top to bottom, then the second, and so on).
For two qubits this gives T[1,0] = t5 + i t6, T[2,1] = t7 + i t8,
T[3,2] = t9 + i t10, T[2,0] = t11 + i t12, T[3,1] = t13 + i t14 and
T[3,0] = t15 + i t16 (1-based t, 0-based matrix indices).
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from .qcore import ArrayLike, DensityMatrix, as_array, pauli_string, rotation_pulse, tensor_product

Entry = Tuple[float, float]


def pauli_labels(n_qubits: int) -> List[str]:
    """All non-identity Pauli labels in lexicographic IXYZ order."""
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n_qubits) if set(p) != {"I"}]


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    n_qubits: int
    values: Dict[str, Entry] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for lab, (mean, sigma) in self.values.items():
            lab = lab.upper()
            if len(lab) != self.n_qubits or set(lab) - set("IXYZ"):
                raise ValueError(f"bad label {lab!r} for {self.n_qubits} qubits")
            if set(lab) == {"I"}:
                raise ValueError("the all-identity label is fixed by the trace and not recorded")
            if sigma < 0:
                raise ValueError("sigma must be nonnegative")
            clean[lab] = (float(mean), float(sigma))
        object.__setattr__(self, "values", clean)

    def is_complete(self) -> bool:
        return set(self.values) == set(pauli_labels(self.n_qubits))

    def require_complete(self) -> None:
        missing = sorted(set(pauli_labels(self.n_qubits)) - set(self.values))
        if missing:
            raise ValueError(f"record is missing {len(missing)} labels, e.g. {missing[:3]}")

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        buf.write(f"# n_qubits={self.n_qubits}\n")
        buf.write("label,mean,sigma\n")
        for lab in sorted(self.values):
            m, s = self.values[lab]
            buf.write(f"{lab},{m:.17g},{s:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MeasurementRecord":
        n = None
        vals: Dict[str, Entry] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "n_qubits":
                    n = int(val)
                continue
            if line.startswith("label,"):
                continue
            lab, mean, sigma = line.split(",")
            vals[lab] = (float(mean), float(sigma))
        if n is None:
            raise ValueError("missing n_qubits header")
        return cls(n, vals)


# ---------------------------------------------------------------------------
# simulated data


def simulate_expectations(rho: ArrayLike, sigma: float, seed: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> MeasurementRecord:
    """Exact Pauli expectations plus independent N(0, sigma^2) noise."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    m = as_array(rho)
    n = int(round(math.log2(m.shape[0])))
    rng = rng if rng is not None else np.random.default_rng(seed)
    vals = {}
    for lab in pauli_labels(n):
        exact = float(np.real(np.trace(m @ pauli_string(lab))))
        noise = rng.normal(0.0, sigma) if sigma > 0 else 0.0
        vals[lab] = (exact + noise, sigma)
    return MeasurementRecord(n, vals)


NMR_PREPS = ("II", "IX", "IY", "XX")


def _prep_unitary(prep: str) -> np.ndarray:
    """90-degree readout pulses; character i is the pulse axis on spin i (I = none)."""
    if prep not in NMR_PREPS:
        raise ValueError(f"unknown preparation {prep!r}; expected one of {NMR_PREPS}")
    mats = []
    for c in prep:
        if c == "I":
            mats.append(np.eye(2))
        else:
            mats.append(rotation_pulse(math.pi / 2, 0.0 if c == "X" else math.pi / 2))
    return tensor_product(*mats)


# Each spin shows a doublet. Its two lines mix the single-spin coherence and
# the coherence conditioned on the partner's z state:
#   peaks = 1/2 [[1, 1], [1, -1]] (<s_minus>, <s_minus z_partner>)
# with s_minus = X - iY taken after the readout pulse.
_PEAK_OPERATORS = {
    1: (("XI", "YI"), ("XZ", "YZ")),
    2: (("IX", "IY"), ("ZX", "ZY")),
}
_MIX = 0.5 * np.array([[1, 1], [1, -1]])


def simulate_nmr_peaks(rho: ArrayLike, prep_pulse: str, seed: Optional[int] = None, sigma: float = 0.0, rng: Optional[np.random.Generator] = None) -> Dict[int, np.ndarray]:
    """Complex doublet amplitudes for each spin of a two-qubit state after a readout pulse.

    Returns ``{spin: array([peak_a, peak_b])}``; Gaussian noise of scale
    ``sigma`` is added independently to real and imaginary parts.
    """
    m = as_array(rho)
    if m.shape != (4, 4):
        raise ValueError("NMR peak simulation is defined for two spins")
    u = _prep_unitary(prep_pulse)
    rotated = u @ m @ u.conj().T
    rng = rng if rng is not None else np.random.default_rng(seed)
    out = {}
    for spin, pairs in _PEAK_OPERATORS.items():
        coh = np.array(
            [np.trace(rotated @ pauli_string(x)) - 1j * np.trace(rotated @ pauli_string(y)) for x, y in pairs]
        )
        peaks = _MIX @ coh
        if sigma > 0:
            peaks = peaks + rng.normal(0, sigma, 2) + 1j * rng.normal(0, sigma, 2)
        out[spin] = peaks
    return out


def _heisenberg_pauli(u: np.ndarray, label: str) -> Tuple[str, float]:
    """U^dagger P U as a signed Pauli label (readout pulses are Clifford)."""
    op = u.conj().T @ pauli_string(label) @ u
    n = len(label)
    for cand in itertools.product("IXYZ", repeat=n):
        c = "".join(cand)
        coef = np.trace(pauli_string(c) @ op) / 2**n
        if abs(abs(coef) - 1) < 1e-9:
            return c, float(np.real(coef))
    raise ValueError("operator is not a signed Pauli product")


def record_from_nmr_peaks(peaks_by_prep: Dict[str, Dict[int, np.ndarray]], sigma: float) -> MeasurementRecord:
    """Invert the doublet mixing and map every reading back to a Pauli expectation.

    Readings that land on the same Pauli product are averaged; the stored
    uncertainty follows from the peak noise sigma through the inversion
    (sqrt 2 sigma per component) and the averaging.
    """
    acc: Dict[str, List[float]] = {}
    for prep, peaks in peaks_by_prep.items():
        u = _prep_unitary(prep)
        for spin, pairs in _PEAK_OPERATORS.items():
            coh = np.linalg.solve(_MIX, np.asarray(peaks[spin]))
            for (x, y), val in zip(pairs, coh):
                for lab, reading in ((x, val.real), (y, -val.imag)):
                    base, sign = _heisenberg_pauli(u, lab)
                    acc.setdefault(base, []).append(sign * reading)
    vals = {}
    for lab, readings in acc.items():
        s = math.sqrt(2) * sigma / math.sqrt(len(readings))
        vals[lab] = (float(np.mean(readings)), s)
    return MeasurementRecord(2, vals)


def simulate_nmr_record(rho: ArrayLike, sigma: float, seed: Optional[int] = None) -> MeasurementRecord:
    """Complete two-qubit record assembled from the four readout experiments."""
    rng = np.random.default_rng(seed)
    peaks = {p: simulate_nmr_peaks(rho, p, sigma=sigma, rng=rng) for p in NMR_PREPS}
    return record_from_nmr_peaks(peaks, sigma)


# ---------------------------------------------------------------------------
# linear inversion


def qst_linear_inversion(rec: MeasurementRecord) -> DensityMatrix:
    """rho = 2^-n (I + sum_P mean_P P); Hermitian and unit trace, not necessarily PSD."""
    rec.require_complete()
    d = 2**rec.n_qubits
    m = np.eye(d, dtype=complex)
    for lab, (mean, _) in rec.values.items():
        m = m + mean * pauli_string(lab)
    return DensityMatrix.from_array(m / d)


# ---------------------------------------------------------------------------
# T parametrization


def _offdiag_positions(d: int) -> List[Tuple[int, int]]:
    return [(i + k, i) for k in range(1, d) for i in range(d - k)]


def t_to_matrix(t: np.ndarray) -> np.ndarray:
    """Lower-triangular T from the real parameter vector."""
    t = np.asarray(t, dtype=float)
    d = int(round(math.sqrt(t.size)))
    if d * d != t.size:
        raise ValueError("parameter vector length must be 4^n")
    m = np.diag(t[:d]).astype(complex)
    for k, (i, j) in enumerate(_offdiag_positions(d)):
        m[i, j] = t[d + 2 * k] + 1j * t[d + 2 * k + 1]
    return m


def matrix_to_t(tm: np.ndarray) -> np.ndarray:
    d = tm.shape[0]
    out = [np.real(np.diag(tm))]
    for i, j in _offdiag_positions(d):
        out.append([tm[i, j].real, tm[i, j].imag])
    return np.concatenate([np.ravel(x) for x in out])


def rho_from_t(t: np.ndarray) -> DensityMatrix:
    """T^dagger T normalized to unit trace."""
    tm = t_to_matrix(t)
    g = tm.conj().T @ tm
    tr = np.real(np.trace(g))
    if tr <= 0:
        raise ValueError("all-zero parameter vector has no normalization")
    return DensityMatrix.from_array(g / tr)


def _pivoted_cholesky(a: np.ndarray) -> np.ndarray:
    """Lower L with a = L L^dagger, complex pivots allowed, zero pivots skipped."""
    d = a.shape[0]
    l = np.zeros_like(a, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(a))))
    for j in range(d):
        piv = a[j, j] - np.sum(l[j, :j] * l[j, :j].conj())
        root = np.sqrt(complex(piv))
        if abs(root) ** 2 <= 1e-14 * scale:
            continue
        l[j, j] = root
        for i in range(j + 1, d):
            l[i, j] = (a[i, j] - np.sum(l[i, :j] * l[j, :j].conj())) / root.conjugate()
    return l


def t_from_rho(rho: ArrayLike) -> np.ndarray:
    """Parameters t with rho_from_t(t) = rho for positive rho.

    rho = T^dagger T with T lower triangular is a Cholesky factorization of
    the index-reversed matrix. For indefinite input a negative pivot gives an
    imaginary diagonal entry; only its real part is kept, so the result is
    a usable starting point rather than an exact factor.
    """
    m = as_array(rho)
    d = m.shape[0]
    if d > 8:
        raise ValueError("t_from_rho supports up to three qubits")
    rev = m[::-1, ::-1]
    l = _pivoted_cholesky(rev)
    tm = l.conj().T[::-1, ::-1]
    return matrix_to_t(tm)


def _pauli_stack(n: int) -> Tuple[List[str], np.ndarray]:
    labels = pauli_labels(n)
    return labels, np.array([pauli_string(l) for l in labels])


def _residual_setup(rec: MeasurementRecord):
    rec.require_complete()
    labels, paulis = _pauli_stack(rec.n_qubits)
    means = np.array([rec.values[l][0] for l in labels])
    sig = np.array([rec.values[l][1] for l in labels])
    return labels, paulis, means, sig


def likelihood(t: np.ndarray, rec: MeasurementRecord) -> float:
    """sum_P (Tr(rho(t) P) - mean_P)^2 / (2 sigma_P^2)."""
    _, paulis, means, sig = _residual_setup(rec)
    rho = rho_from_t(t).matrix
    pred = np.real(np.einsum("pij,ji->p", paulis, rho))
    diff = pred - means
    if np.any((sig == 0) & (np.abs(diff) > 0)):
        raise ValueError("zero sigma with nonzero mismatch gives an infinite penalty")
    safe = np.where(sig > 0, sig, 1.0)
    return float(np.sum(np.where(sig > 0, diff**2 / (2 * safe**2), 0.0)))


class _Objective:
    """Weighted residuals r_P = (n_P(t) - mean_P) / (sqrt 2 sigma_P) and their Jacobian.

    One extra residual Tr(T^dagger T) - 1 removes the scale redundancy of T.
    It does not change rho and is excluded from the reported likelihood.
    """

    def __init__(self, rec: MeasurementRecord):
        _, paulis, self.means, sig = _residual_setup(rec)
        if np.any(sig <= 0):
            # noiseless records: unit weights give the same minimizer
            sig = np.where(sig > 0, sig, 1.0)
        self.w = 1.0 / (math.sqrt(2.0) * sig)
        d = self.d = paulis.shape[1]
        pos = [(i, i) for i in range(d)] + _offdiag_positions(d)
        rows = np.array([p[0] for p in pos])
        cols = np.array([p[1] for p in pos])
        # flat index of each parameter's matrix slot, and of its transpose
        self.flat = rows * d + cols
        self.flat_t = cols * d + rows
        self.n_diag = d
        # Tr(P G) = sum_ij P_ij G_ji = (P flattened) . (G^T flattened)
        self.p_flat = paulis.reshape(len(paulis), -1)
        self.paulis = paulis

    def _matrix(self, t: np.ndarray) -> np.ndarray:
        d = self.d
        vals = np.empty(len(self.flat), dtype=complex)
        vals[:d] = t[:d]
        vals[d:] = t[d::2] + 1j * t[d + 1 :: 2]
        m = np.zeros(d * d, dtype=complex)
        m[self.flat] = vals
        return m.reshape(d, d)

    def _num(self, tm: np.ndarray) -> np.ndarray:
        g = tm.conj().T @ tm
        return np.real(self.p_flat @ g.T.ravel())

    def residuals(self, t: np.ndarray) -> np.ndarray:
        n = float(t @ t)
        pred = self._num(self._matrix(t)) / n
        # the last residual fixes the scale of T, which rho does not see
        return np.append(self.w * (pred - self.means), n - 1.0)

    def jacobian(self, t: np.ndarray) -> np.ndarray:
        tm = self._matrix(t)
        n = float(t @ t)
        num = self._num(tm)
        # d Tr(T^dag T P) / d Re T_ab = 2 Re (P T^dag)_ba, / d Im T_ab = -2 Im (P T^dag)_ba
        pt = (self.paulis @ tm.conj().T).reshape(len(num), -1)[:, self.flat_t]
        d = self.d
        dnum = np.empty((len(num), t.size))
        dnum[:, :d] = 2 * pt[:, :d].real
        dnum[:, d::2] = 2 * pt[:, d:].real
        dnum[:, d + 1 :: 2] = -2 * pt[:, d:].imag
        jac = (dnum * n - np.outer(num, 2 * t)) / n**2
        return np.vstack([self.w[:, None] * jac, 2 * t])


@dataclass(frozen=True, eq=False)
class MLEResult:
    rho: DensityMatrix
    likelihood: float
    iterations: int
    converged: bool
    t: np.ndarray

    def __iter__(self):
        # allows ``rho, L, iterations = mle_reconstruct(...)``
        return iter((self.rho, self.likelihood, self.iterations))


def mle_reconstruct(rec: MeasurementRecord, max_iter: int = 500, tol: float = 1e-8, t0: Optional[np.ndarray] = None) -> MLEResult:
    """Maximum-likelihood state via BFGS on the T parametrization.

    Starts from the factor of the linear-inversion estimate with imaginary
    diagonal parts dropped (or from ``t0``). ``tol`` bounds the gradient
    norm. Deterministic: no randomness is involved, so identical records
    give identical results.

    A Gauss-Newton method (Levenberg-Marquardt) is a poor fit here. When the
    optimum is rank deficient, T has vanishing rows; the curvature along
    them comes from the residual times its second derivative, which
    Gauss-Newton drops, so it crawls. BFGS builds that curvature from
    gradient differences.
    """
    obj = _Objective(rec)
    if t0 is None:
        t0 = t_from_rho(qst_linear_inversion(rec))
        if not np.any(t0[: obj.d] > 0):
            t0 = t0.copy()
            t0[: obj.d] = 1.0
    t0 = np.asarray(t0, dtype=float)

    def fun(t):
        r = obj.residuals(t)
        return float(r @ r), 2.0 * (obj.jacobian(t).T @ r)

    sol = minimize(fun, t0, jac=True, method="BFGS", options={"gtol": tol, "maxiter": max_iter})
    t = sol.x
    f, g = fun(t)
    lval = float(np.sum(obj.residuals(t)[:-1] ** 2))
    # status 2 means the line search cannot improve at rounding level; that is
    # a stationary point whenever the gradient is small relative to f
    converged = sol.status == 0 or (sol.status == 2 and np.linalg.norm(g) <= 1e-5 * max(1.0, f))
    return MLEResult(rho_from_t(t), lval, int(sol.nit), bool(converged), t)


def clipped_qst(rec: MeasurementRecord) -> DensityMatrix:
    """Linear inversion with negative eigenvalues set to zero and trace restored."""
    m = qst_linear_inversion(rec).matrix
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0, None)
    return DensityMatrix.from_array((v * (w / w.sum())) @ v.conj().T)
