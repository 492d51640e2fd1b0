"""Dense linear algebra over small qubit registers.

Conventions used everywhere in the package:

* qubit 1 is the leftmost Kronecker factor and the most significant bit of a
  basis label, so ``|b1 b2 ... bn>`` has index ``int("b1b2...bn", 2)``;
* hbar = 1, Hamiltonians are angular frequencies (rad/s);
* spin operators are ``I_a = sigma_a / 2``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

ArrayLike = Union[np.ndarray, "DensityMatrix", "PureState", "Hamiltonian"]

CONSTRUCT_TOL = 1e-12
DERIVED_TOL = 1e-10
PSD_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


class InvalidStateError(ValueError):
    """Raised when a matrix fails a physicality check."""


def _n_qubits_of(dim: int) -> int:
    n = int(round(math.log2(dim))) if dim > 0 else -1
    if n < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def as_array(x: ArrayLike) -> np.ndarray:
    """Return the underlying complex ndarray of a state, Hamiltonian or array."""
    if isinstance(x, (DensityMatrix, Hamiltonian)):
        return x.matrix
    if isinstance(x, PureState):
        return x.amplitudes
    return np.asarray(x, dtype=complex)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector on ``n_qubits`` qubits."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.size != 2**self.n_qubits:
            raise ValueError("amplitude count does not match n_qubits")
        if abs(np.vdot(amps, amps).real - 1.0) > CONSTRUCT_TOL:
            raise InvalidStateError("state vector is not normalized")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amps: Iterable[complex], normalize: bool = True) -> "PureState":
        v = np.asarray(list(amps) if not isinstance(amps, np.ndarray) else amps, dtype=complex).ravel()
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(_n_qubits_of(v.size), v)

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian unit-trace matrix.

    Positivity is deliberately not enforced here because linear-inversion
    tomography produces indefinite matrices. Use :meth:`checked` when a
    physical state is required.
    """

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = 2**self.n_qubits
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > CONSTRUCT_TOL:
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > CONSTRUCT_TOL:
            raise InvalidStateError(f"density matrix trace is {np.trace(m).real:.3e}, not 1")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_array(cls, m: np.ndarray, hermitize: bool = True) -> "DensityMatrix":
        """Wrap ``m``; optionally symmetrize away rounding-level anti-Hermitian parts."""
        m = np.asarray(m, dtype=complex)
        if hermitize:
            m = 0.5 * (m + m.conj().T)
        return cls(_n_qubits_of(m.shape[0]), m)

    @classmethod
    def checked(cls, m: np.ndarray) -> "DensityMatrix":
        """Construct and additionally require min eigenvalue >= -1e-10."""
        rho = cls.from_array(m)
        lam = np.linalg.eigvalsh(rho.matrix).min()
        if lam < -PSD_TOL:
            raise InvalidStateError(f"density matrix has eigenvalue {lam:.3e} < -1e-10")
        return rho

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expect(self, op: np.ndarray) -> float:
        return float(np.real(np.trace(self.matrix @ op)))


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Hermitian generator in rad/s."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (2**self.n_qubits,) * 2:
            raise ValueError("Hamiltonian shape does not match n_qubits")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > CONSTRUCT_TOL:
            raise ValueError("Hamiltonian is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_array(cls, m: np.ndarray) -> "Hamiltonian":
        m = np.asarray(m, dtype=complex)
        return cls(_n_qubits_of(m.shape[0]), m)


# ---------------------------------------------------------------------------
# tensor algebra


def tensor_product(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product, first argument is qubit 1 (leftmost)."""
    if not factors:
        raise ValueError("need at least one factor")
    return reduce(np.kron, [as_array(f) for f in factors])


def embed(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Place a single-qubit operator on ``qubit`` (1-indexed) of an n-qubit register."""
    if not 1 <= qubit <= n_qubits:
        raise IndexError(f"qubit {qubit} out of range 1..{n_qubits}")
    mats = [I2] * n_qubits
    mats[qubit - 1] = np.asarray(op, dtype=complex)
    return tensor_product(*mats)


def pauli_string(label: str) -> np.ndarray:
    """Operator for a Pauli label such as ``"XZI"``; character i acts on qubit i+1."""
    try:
        return tensor_product(*[PAULI[c] for c in label.upper()])
    except KeyError as exc:
        raise ValueError(f"bad Pauli label {label!r}") from exc


def partial_trace(rho: ArrayLike, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the qubits in ``keep`` (1-indexed)."""
    m = as_array(rho)
    n = _n_qubits_of(m.shape[0])
    keep = sorted(set(keep))
    if not keep or len(keep) == n:
        raise ValueError("keep must be a nonempty strict subset of the qubits")
    if keep[0] < 1 or keep[-1] > n:
        raise IndexError("qubit index out of range")
    traced = [q for q in range(1, n + 1) if q not in keep]
    t = m.reshape([2] * (2 * n))
    # trace the highest-numbered qubits first so axis positions stay valid
    for q in reversed(traced):
        cur = t.ndim // 2
        t = np.trace(t, axis1=q - 1, axis2=q - 1 + cur)
    k = len(keep)
    return DensityMatrix.from_array(t.reshape(2**k, 2**k))


def partial_transpose(rho: ArrayLike, qubit: int) -> np.ndarray:
    """Transpose the row/column indices belonging to one qubit."""
    m = as_array(rho)
    n = _n_qubits_of(m.shape[0])
    if not 1 <= qubit <= n:
        raise IndexError(f"qubit {qubit} out of range 1..{n}")
    axes = list(range(2 * n))
    axes[qubit - 1], axes[qubit - 1 + n] = axes[qubit - 1 + n], axes[qubit - 1]
    return m.reshape([2] * (2 * n)).transpose(axes).reshape(2**n, 2**n)


# ---------------------------------------------------------------------------
# evolution


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` for Hermitian ``h`` via eigendecomposition."""
    w, v = np.linalg.eigh(as_array(h))
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def unitary_evolve(rho: ArrayLike, h: ArrayLike, t: float) -> DensityMatrix:
    """rho -> U rho U^dagger with U = exp(-i H t)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    u = expm_hermitian(as_array(h), t)
    return DensityMatrix.from_array(u @ as_array(rho) @ u.conj().T)


def _trig(x: float) -> tuple:
    """(cos x, sin x) with rounding dust at multiples of pi/2 removed.

    cos(pi/2) evaluates to 6e-17 in floating point; leaving that in a pi
    pulse puts an artificial floor under high-order decoupling errors.
    """
    c, s = math.cos(x), math.sin(x)
    c = 0.0 if abs(c) < 1e-15 else c
    s = 0.0 if abs(s) < 1e-15 else s
    return c, s


def rotation_pulse(theta: float, phi: float, qubit: int = 1, n_qubits: int = 1) -> np.ndarray:
    """Hard pulse ``exp(-i theta (I_x cos phi + I_y sin phi))`` on one qubit."""
    if not 1 <= qubit <= n_qubits:
        raise IndexError(f"qubit {qubit} out of range 1..{n_qubits}")
    # closed form of the spin-1/2 rotation
    c, s = _trig(theta / 2)
    cp, sp = _trig(phi)
    axis = cp * SX + sp * SY
    r = c * I2 - 1j * s * axis
    return embed(r, qubit, n_qubits)


def collective_pulse(theta: float, phi: float, n_qubits: int) -> np.ndarray:
    """The same rotation applied simultaneously to every qubit."""
    r = rotation_pulse(theta, phi)
    return tensor_product(*[r] * n_qubits)


def _controlled(u: np.ndarray, control: int, target: int, n_qubits: int) -> np.ndarray:
    if control == target:
        raise ValueError("control and target must differ")
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    return embed(p0, control, n_qubits) + embed(p1, control, n_qubits) @ embed(u, target, n_qubits)


def gate(name: str, *args, n_qubits: int | None = None) -> np.ndarray:
    """Library gate by name.

    ``gate("PHASE", phi)``, ``gate("CNOT", control, target)`` and
    ``gate("CR", theta, phi, control, target)`` take positional parameters.
    Two-qubit gates default to the smallest register holding both qubits.
    """
    key = name.upper()
    if key == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if key in ("X", "Y", "Z"):
        return PAULI[key].copy()
    if key == "SQRT_NOT":
        return 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
    if key == "PHASE":
        (phi,) = args
        return np.diag([1, cmath.exp(1j * phi)])
    if key == "SWAP":
        return np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    if key == "CNOT":
        control, target = args if args else (1, 2)
        n = n_qubits or max(control, target, 2)
        return _controlled(SX, control, target, n)
    if key == "CR":
        theta, phi, control, target = args
        n = n_qubits or max(control, target, 2)
        return _controlled(rotation_pulse(theta, phi), control, target, n)
    raise ValueError(f"unknown gate {name!r}")


# ---------------------------------------------------------------------------
# states


def make_pseudopure(psi: PureState, epsilon: float) -> DensityMatrix:
    """(1 - eps)/2^n I + eps |psi><psi|."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    d = 2**psi.n_qubits
    v = psi.amplitudes
    return DensityMatrix(psi.n_qubits, (1 - epsilon) / d * np.eye(d) + epsilon * np.outer(v, v.conj()))


def ket(*labels: str, coeffs: Sequence[complex] | None = None) -> PureState:
    """Normalized superposition of computational basis kets given as bit strings."""
    n = len(labels[0])
    v = np.zeros(2**n, dtype=complex)
    coeffs = coeffs if coeffs is not None else [1.0] * len(labels)
    for lab, c in zip(labels, coeffs):
        if len(lab) != n:
            raise ValueError("labels must have equal length")
        v[int(lab, 2)] += c
    return PureState.from_amplitudes(v)


def bd_eigenvalues(c1: float, c2: float, c3: float) -> np.ndarray:
    """The four eigenvalues 1/4 (1 -+ c1 -+ c2 -+ c3) of a Bell-diagonal state."""
    return 0.25 * np.array(
        [1 - c1 - c2 - c3, 1 - c1 + c2 + c3, 1 + c1 - c2 + c3, 1 + c1 + c2 - c3]
    )


def bell_diagonal(c1: float, c2: float, c3: float) -> DensityMatrix:
    """(I + sum_i c_i sigma_i x sigma_i) / 4 after checking its eigenvalues."""
    lam = bd_eigenvalues(c1, c2, c3)
    if lam.min() < -CONSTRUCT_TOL:
        raise InvalidStateError(f"BD coefficients give eigenvalue {lam.min():.3e}")
    m = np.eye(4, dtype=complex)
    for c, s in zip((c1, c2, c3), (SX, SY, SZ)):
        m = m + c * np.kron(s, s)
    return DensityMatrix(2, m / 4)


_STANDARD = {
    "BELL_PHI+": (("00", "11"), (1, 1)),
    "BELL_PHI-": (("00", "11"), (1, -1)),
    "BELL_PSI+": (("01", "10"), (1, 1)),
    "BELL_PSI-": (("01", "10"), (1, -1)),
    "SINGLET": (("01", "10"), (1, -1)),
    "GHZ_PLUS": (("000", "111"), (1, 1)),
    "GHZ_MINUS": (("000", "111"), (1, -1)),
    "W": (("100", "001", "010"), (1, 1, 1)),
    "W_I_PHASE": (("001", "010", "100"), (1j, 1, 1)),
    "WWBAR": (("001", "010", "011", "100", "101", "110"), (1,) * 6),
}


def standard_state(name: str, *args) -> Union[PureState, DensityMatrix]:
    """Named state. ``standard_state("BD", c1, c2, c3)`` returns a DensityMatrix."""
    key = name.upper()
    if key == "BD":
        return bell_diagonal(*args)
    if key not in _STANDARD:
        raise ValueError(f"unknown state {name!r}")
    labels, coeffs = _STANDARD[key]
    return ket(*labels, coeffs=coeffs)


def projector(state: ArrayLike) -> DensityMatrix:
    v = as_array(state).ravel()
    return DensityMatrix.from_array(np.outer(v, v.conj()))


# ---------------------------------------------------------------------------
# fidelities


def fidelity_overlap(a: ArrayLike, b: ArrayLike) -> float:
    """Normalized Hilbert-Schmidt overlap Tr(ab)/sqrt(Tr a^2 Tr b^2)."""
    a, b = as_array(a), as_array(b)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    num = np.trace(a @ b).real
    den = math.sqrt(np.trace(a @ a).real * np.trace(b @ b).real)
    if den == 0.0:
        raise ValueError("zero matrix has no normalized overlap")
    return float(num / den)


#: eigenvalues below this are rounding dust; their square roots (~1e-8) would
#: otherwise leak into fidelities of pure states
SQRT_DUST = 1e-14


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    if w.min() < -PSD_TOL:
        raise InvalidStateError(f"matrix has eigenvalue {w.min():.3e} < -1e-10")
    return (v * np.sqrt(np.where(w > SQRT_DUST, w, 0.0))) @ v.conj().T


def fidelity_uhlmann(a: ArrayLike, b: ArrayLike) -> float:
    """(Tr sqrt(sqrt(a) b sqrt(a)))^2.

    Eigenvalues under 1e-14 are treated as zero in both square roots, so a
    genuine eigenvalue that small can shift the result by up to ~1e-7.
    """
    a, b = as_array(a), as_array(b)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    sa = _psd_sqrt(a)
    _psd_sqrt(b)  # validates b
    inner = sa @ b @ sa
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.where(w > SQRT_DUST, w, 0.0))) ** 2)


def unitary_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Phase-insensitive closeness |Tr(U^dagger V)|/d, equal to 1 for identical gates."""
    return float(abs(np.trace(u.conj().T @ v)) / u.shape[0])


def random_density_matrix(n_qubits: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Ginibre-ensemble random state (full rank unless ``rank`` is given)."""
    d = 2**n_qubits
    k = rank or d
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    m = g @ g.conj().T
    return DensityMatrix.from_array(m / np.trace(m))


def random_pure_state(n_qubits: int, rng: np.random.Generator) -> PureState:
    d = 2**n_qubits
    return PureState.from_amplitudes(rng.normal(size=d) + 1j * rng.normal(size=d))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
