"""Gradient ascent pulse engineering for piecewise-constant controls.

The total propagator is U = U_N ... U_1 with
U_j = exp(-i dt (H_0 + sum_k u_k(j) H_k)), and the figure of merit is the
phase-insensitive overlap Phi = |Tr(U_tgt^dagger U)|^2 / d^2.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .qcore import SX, SY, SZ, ArrayLike, as_array, embed, gate

UNITARY_TOL = 1e-10


def _hermitian(m: ArrayLike, what: str) -> np.ndarray:
    a = np.array(as_array(m), dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be a square matrix")
    if np.max(np.abs(a - a.conj().T)) > 1e-12:
        raise ValueError(f"{what} is not Hermitian")
    return a


@dataclass(frozen=True, eq=False)
class ControlProblem:
    h0: np.ndarray
    controls: Tuple[np.ndarray, ...]
    n_steps: int
    dt: float
    target: np.ndarray

    def __post_init__(self):
        h0 = _hermitian(self.h0, "drift")
        ctrls = tuple(_hermitian(h, f"control {k}") for k, h in enumerate(self.controls))
        if not ctrls:
            raise ValueError("at least one control Hamiltonian is required")
        tgt = np.array(as_array(self.target), dtype=complex)
        d = h0.shape[0]
        if any(h.shape != (d, d) for h in ctrls) or tgt.shape != (d, d):
            raise ValueError("dimension mismatch between drift, controls and target")
        if np.max(np.abs(tgt.conj().T @ tgt - np.eye(d))) > UNITARY_TOL:
            raise ValueError("target is not unitary")
        if int(self.n_steps) < 1 or not self.dt > 0:
            raise ValueError("need n_steps >= 1 and dt > 0")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "controls", ctrls)
        object.__setattr__(self, "target", tgt)
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt


@dataclass(frozen=True, eq=False)
class ControlField:
    """Amplitudes u_k(j) in rad/s, one row per time step."""

    amplitudes: np.ndarray
    dt: Optional[float] = None

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2:
            raise ValueError("amplitudes must be an N x m matrix")
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitudes must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.amplitudes.shape

    def to_csv(self, dt: Optional[float] = None) -> str:
        dt = self.dt if dt is None else dt
        buf = io.StringIO(newline="")
        if dt is not None:
            buf.write(f"# dt={dt:.12g}\n")
        m = self.amplitudes.shape[1]
        buf.write(",".join(["step"] + [f"u_{k + 1}" for k in range(m)]) + "\n")
        for j, row in enumerate(self.amplitudes):
            buf.write(",".join([str(j + 1)] + [f"{x:.12g}" for x in row]) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ControlField":
        dt = None
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "dt":
                    dt = float(val)
                continue
            if line.startswith("step"):
                continue
            rows.append([float(x) for x in line.split(",")[1:]])
        return cls(np.array(rows), dt)


def _check_shape(problem: ControlProblem, fld: ControlField) -> np.ndarray:
    u = fld.amplitudes
    if u.shape != (problem.n_steps, problem.n_controls):
        raise ValueError(f"field shape {u.shape} does not match ({problem.n_steps}, {problem.n_controls})")
    return u


def _step_eigs(problem: ControlProblem, u: np.ndarray):
    """Eigen-decompositions of every step Hamiltonian, batched."""
    hs = problem.h0[None] + np.einsum("jk,kab->jab", u, np.array(problem.controls))
    return np.linalg.eigh(hs)


def propagate(problem: ControlProblem, fld: ControlField) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Total propagator U_N ... U_1 and the list of step propagators [U_1, ..., U_N]."""
    u = _check_shape(problem, fld)
    w, v = _step_eigs(problem, u)
    steps = np.einsum("jab,jb,jcb->jac", v, np.exp(-1j * problem.dt * w), v.conj())
    total = np.eye(problem.dim, dtype=complex)
    for s in steps:
        total = s @ total
    return total, list(steps)


def _phi(problem: ControlProblem, total: np.ndarray) -> float:
    d = problem.dim
    return float(abs(np.trace(problem.target.conj().T @ total)) ** 2 / d**2)


def grape_fidelity(problem: ControlProblem, fld: ControlField) -> float:
    total, _ = propagate(problem, fld)
    return _phi(problem, total)


def _divided_differences(w: np.ndarray, dt: float) -> np.ndarray:
    """F_ab = (e^{-i dt w_a} - e^{-i dt w_b}) / (w_a - w_b), limit -i dt e^{-i dt w_a} on ties."""
    e = np.exp(-1j * dt * w)
    dw = w[..., :, None] - w[..., None, :]
    de = e[..., :, None] - e[..., None, :]
    close = np.abs(dw) < 1e-9
    limit = -1j * dt * np.broadcast_to(e[..., :, None], de.shape)
    return np.where(close, limit, de / np.where(close, 1.0, dw))


def grape_gradient(problem: ControlProblem, fld: ControlField, method: str = "exact") -> np.ndarray:
    """dPhi/du_k(j) as an N x m matrix.

    ``method="first_order"`` is the textbook formula
    2 dt Im{Tr(U_tgt^dag U_N..U_{j+1} H_k U_j..U_1) Tr(U^dag U_tgt)} / d^2,
    which treats dU_j/du_k as -i dt H_k U_j and is accurate only when
    dt ||H|| is small. ``method="exact"`` (default) differentiates the step
    exponential in the eigenbasis of the step Hamiltonian, so it agrees
    with finite differences at any step size.
    """
    u = _check_shape(problem, fld)
    n, d, dt = problem.n_steps, problem.dim, problem.dt
    w, v = _step_eigs(problem, u)
    steps = np.einsum("jab,jb,jcb->jac", v, np.exp(-1j * dt * w), v.conj())

    # forward[j] = U_j ... U_1 (forward[-1] = I); backward[j] = U_N ... U_{j+1}
    fwd = np.empty((n + 1, d, d), dtype=complex)
    fwd[0] = np.eye(d)
    for j in range(n):
        fwd[j + 1] = steps[j] @ fwd[j]
    bwd = np.empty((n + 1, d, d), dtype=complex)
    bwd[n] = np.eye(d)
    for j in range(n - 1, -1, -1):
        bwd[j] = bwd[j + 1] @ steps[j]
    total = fwd[n]
    tgt_dag = problem.target.conj().T
    z_conj = np.conj(np.trace(tgt_dag @ total))
    ctrls = np.array(problem.controls)

    # Tr(U_tgt^dag B_j dU_j A_j) = Tr(dU_j X_j) with X_j = A_j U_tgt^dag B_j
    x = np.einsum("jab,bc,jcd->jad", fwd[:n], tgt_dag, bwd[1:])
    if method == "first_order":
        # dU_j = -i dt H_k U_j
        y = np.einsum("jab,jbc->jac", steps, x)
        tr = -1j * dt * np.einsum("kab,jba->jk", ctrls, y)
    elif method == "exact":
        f = _divided_differences(w, dt)
        k_eig = np.einsum("jba,kbc,jcd->jkad", v.conj(), ctrls, v)
        y = np.einsum("jba,jbc,jcd->jad", v.conj(), x, v)
        tr = np.einsum("jab,jkab,jba->jk", f, k_eig, y)
    else:
        raise ValueError("method must be 'exact' or 'first_order'")
    return 2.0 * np.real(z_conj * tr) / d**2


@dataclass
class GrapeOptions:
    step: Optional[float] = None  # initial epsilon; None picks one from the first gradient
    max_iter: int = 500
    tol: float = 1e-4
    bounds: Optional[float] = None  # |u| <= bounds when set
    max_halvings: int = 40
    method: str = "exact"


@dataclass(frozen=True, eq=False)
class GrapeResult:
    field: ControlField
    trace: List[float]
    converged: bool
    iterations: int

    @property
    def fidelity(self) -> float:
        return self.trace[-1]

    def __iter__(self):
        return iter((self.field, self.trace))


def random_field(problem: ControlProblem, omega_max: float, seed: int) -> ControlField:
    """Seeded uniform amplitudes in [-omega_max/10, omega_max/10]."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-omega_max / 10, omega_max / 10, size=(problem.n_steps, problem.n_controls))
    return ControlField(a, problem.dt)


def grape_optimize(
    problem: ControlProblem,
    init: ControlField | None = None,
    options: GrapeOptions | None = None,
    seed: int = 0,
    omega_max: float = 1.0,
) -> GrapeResult:
    """Gradient ascent u <- u + eps grad Phi with a backtracking line search.

    A trial step is accepted only if it raises Phi, so the returned trace is
    non-decreasing. After an accepted step eps is doubled; on rejection it is
    halved until a gain is found or ``max_halvings`` is used up.
    """
    opts = options or GrapeOptions()
    if init is None:
        init = random_field(problem, omega_max, seed)
    u = np.array(_check_shape(problem, init), dtype=float)

    def project(a):
        return a if opts.bounds is None else np.clip(a, -opts.bounds, opts.bounds)

    u = project(u)
    phi = grape_fidelity(problem, ControlField(u))
    trace = [phi]
    eps = opts.step
    it = 0
    while phi < 1.0 - opts.tol and it < opts.max_iter:
        g = grape_gradient(problem, ControlField(u), method=opts.method)
        gmax = float(np.max(np.abs(g)))
        if gmax == 0.0:
            break
        if eps is None:
            # first trial moves the largest amplitude by a tenth of the current scale
            eps = 0.1 * max(omega_max, float(np.max(np.abs(u)))) / gmax
        accepted = False
        for _ in range(opts.max_halvings):
            trial = project(u + eps * g)
            phi_t = grape_fidelity(problem, ControlField(trial))
            if phi_t > phi:
                accepted = True
                break
            eps *= 0.5
        if not accepted:
            break
        u, phi = trial, phi_t
        trace.append(phi)
        eps *= 2.0
        it += 1
    return GrapeResult(ControlField(u, problem.dt), trace, phi >= 1.0 - opts.tol, it)


# ---------------------------------------------------------------------------
# presets


def not_problem(n_steps: int = 20, duration: float = 1.0) -> ControlProblem:
    """Single spin, no drift, x and y controls (sigma/2), target sigma_x."""
    return ControlProblem(np.zeros((2, 2)), (SX / 2, SY / 2), n_steps, duration / n_steps, SX)


NOT_OMEGA_MAX = 2 * math.pi * 2.0


def cnot_problem(j_hz: float = 50.0, k: int = 1, n_steps: int = 100) -> ControlProblem:
    """Two spins with Ising drift 2 pi J I_z I_z and local x, y controls; target CNOT(1 -> 2)."""
    h0 = 2 * math.pi * j_hz * np.kron(SZ, SZ) / 4
    ctrls = tuple(embed(p / 2, q, 2) for q in (1, 2) for p in (SX, SY))
    t = k / (2 * j_hz)
    return ControlProblem(h0, ctrls, n_steps, t / n_steps, gate("CNOT", 1, 2))


CNOT_OMEGA_MAX = 2 * math.pi * 500.0
