import math

import numpy as np
import pytest

from artifact import grape as G
from artifact import qcore as q
from artifact.qcore import SX, SY, SZ


def _random_problem(rng, d=4, m=3, n=12, dt=0.05):
    def herm():
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        return (a + a.conj().T) / 2

    return G.ControlProblem(herm(), [herm() for _ in range(m)], n, dt, q.random_unitary(d, rng))


def _fd_gradient(problem, fld, h=1e-6):
    u = fld.amplitudes
    out = np.zeros_like(u)
    for j in range(u.shape[0]):
        for k in range(u.shape[1]):
            up, dn = u.copy(), u.copy()
            up[j, k] += h
            dn[j, k] -= h
            out[j, k] = (G.grape_fidelity(problem, G.ControlField(up)) - G.grape_fidelity(problem, G.ControlField(dn))) / (2 * h)
    return out


# ---- problem and field ------------------------------------------------------------


def test_problem_validation():
    with pytest.raises(ValueError):
        G.ControlProblem(np.zeros((2, 2)), (), 10, 0.1, SX)
    with pytest.raises(ValueError):
        G.ControlProblem(np.zeros((2, 2)), (SX,), 10, 0.1, 2 * SX)
    with pytest.raises(ValueError):
        G.ControlProblem(np.zeros((2, 2)), (np.eye(4),), 10, 0.1, SX)
    with pytest.raises(ValueError):
        G.ControlProblem(np.zeros((2, 2)), (np.array([[0, 1], [0, 0]]),), 10, 0.1, SX)
    with pytest.raises(ValueError):
        G.ControlProblem(np.zeros((2, 2)), (SX,), 0, 0.1, SX)
    p = G.not_problem()
    assert (p.dim, p.n_controls, p.n_steps) == (2, 2, 20)
    assert p.duration == pytest.approx(1.0)


def test_field_validation_and_csv():
    with pytest.raises(ValueError):
        G.ControlField(np.array([[np.nan]]))
    assert G.ControlField(np.zeros(5)).shape == (5, 1)
    fld = G.ControlField(np.random.default_rng(0).normal(size=(4, 2)), dt=0.25)
    text = fld.to_csv()
    assert text.splitlines()[:2] == ["# dt=0.25", "step,u_1,u_2"]
    back = G.ControlField.from_csv(text)
    assert back.dt == 0.25
    assert np.allclose(back.amplitudes, fld.amplitudes, rtol=1e-11)
    with pytest.raises(ValueError):
        G.propagate(G.not_problem(), G.ControlField(np.zeros((3, 2))))


# ---- propagation and fidelity --------------------------------------------------------


def test_propagate_examples():
    p = G.not_problem(n_steps=4, duration=1.0)
    total, steps = G.propagate(p, G.ControlField(np.zeros((4, 2))))
    assert np.allclose(total, np.eye(2)) and len(steps) == 4
    # constant pi rad/s on sigma_x/2 for 1 s is a pi rotation about x
    total, _ = G.propagate(p, G.ControlField(np.tile([math.pi, 0.0], (4, 1))))
    assert np.allclose(total, -1j * SX, atol=1e-12)


def test_propagate_matches_sequential_exponentials():
    rng = np.random.default_rng(2)
    p = _random_problem(rng)
    fld = G.ControlField(rng.normal(size=(p.n_steps, p.n_controls)))
    total, steps = G.propagate(p, fld)
    ref = np.eye(4, dtype=complex)
    for j, row in enumerate(fld.amplitudes):
        h = p.h0 + sum(c * hk for c, hk in zip(row, p.controls))
        u = q.expm_hermitian(h, p.dt)
        assert np.allclose(steps[j], u, atol=1e-12)
        ref = u @ ref
    assert np.max(np.abs(total - ref)) <= 1e-12


def test_fidelity_examples():
    p = G.not_problem(n_steps=4)
    assert G.grape_fidelity(p, G.ControlField(np.zeros((4, 2)))) == pytest.approx(0.0, abs=1e-15)
    assert G.grape_fidelity(p, G.ControlField(np.tile([math.pi, 0.0], (4, 1)))) == pytest.approx(1.0, abs=1e-12)
    # half rotation: |Tr(X exp(-i pi/4 X))|^2 / 4 = sin^2(pi/4)
    assert G.grape_fidelity(p, G.ControlField(np.tile([math.pi / 2, 0.0], (4, 1)))) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_is_phase_insensitive():
    rng = np.random.default_rng(3)
    p = _random_problem(rng)
    fld = G.ControlField(rng.normal(size=(p.n_steps, p.n_controls)))
    p2 = G.ControlProblem(p.h0, p.controls, p.n_steps, p.dt, np.exp(0.7j) * p.target)
    assert G.grape_fidelity(p, fld) == pytest.approx(G.grape_fidelity(p2, fld), abs=1e-14)


# ---- gradient ------------------------------------------------------------------------


@pytest.mark.parametrize("seed,d,m", [(0, 2, 2), (1, 4, 3), (2, 8, 2)])
def test_exact_gradient_matches_finite_differences(seed, d, m):
    rng = np.random.default_rng(seed)
    p = _random_problem(rng, d=d, m=m, n=8, dt=0.2)
    fld = G.ControlField(rng.normal(size=(p.n_steps, m)))
    g = G.grape_gradient(p, fld)
    fd = _fd_gradient(p, fld)
    assert np.max(np.abs(g - fd)) <= 1e-5 * np.max(np.abs(fd))


def test_gradient_with_degenerate_step_spectrum():
    # zero field and zero drift: every step Hamiltonian is degenerate
    p = G.not_problem(n_steps=5)
    fld = G.ControlField(np.zeros((5, 2)))
    assert np.max(np.abs(G.grape_gradient(p, fld) - _fd_gradient(p, fld))) <= 1e-8


def test_first_order_gradient_error_scales_with_dt():
    rng = np.random.default_rng(4)
    p0 = _random_problem(rng, d=2, m=2, n=10, dt=0.1)
    u = rng.normal(size=(10, 2))
    errs = []
    for dt in (0.1, 0.05, 0.025):
        p = G.ControlProblem(p0.h0, p0.controls, 10, dt, p0.target)
        fld = G.ControlField(u)
        exact = G.grape_gradient(p, fld)
        approx = G.grape_gradient(p, fld, method="first_order")
        errs.append(np.max(np.abs(approx - exact)) / np.max(np.abs(exact)))
    assert errs[0] > errs[1] > errs[2]
    assert 1.5 < errs[0] / errs[1] < 3 and 1.5 < errs[1] / errs[2] < 3


def test_gradient_method_validation():
    p = G.not_problem(n_steps=2)
    with pytest.raises(ValueError):
        G.grape_gradient(p, G.ControlField(np.zeros((2, 2))), method="second")


def test_gradient_vanishes_at_optimum():
    p = G.not_problem(n_steps=4)
    g = G.grape_gradient(p, G.ControlField(np.tile([math.pi, 0.0], (4, 1))))
    assert np.max(np.abs(g)) <= 1e-12


# ---- optimizer ------------------------------------------------------------------------


def test_random_field_deterministic_and_bounded():
    p = G.cnot_problem()
    a = G.random_field(p, 10.0, seed=3)
    b = G.random_field(p, 10.0, seed=3)
    assert np.array_equal(a.amplitudes, b.amplitudes)
    assert np.max(np.abs(a.amplitudes)) <= 1.0
    assert not np.array_equal(a.amplitudes, G.random_field(p, 10.0, seed=4).amplitudes)


def test_not_gate_optimization():
    res = G.grape_optimize(G.not_problem(), seed=0, omega_max=G.NOT_OMEGA_MAX, options=G.GrapeOptions(tol=1e-6))
    assert res.converged
    assert res.fidelity >= 1 - 1e-6
    assert np.all(np.diff(res.trace) >= 0)
    fld, trace = res
    assert G.grape_fidelity(G.not_problem(), fld) == pytest.approx(trace[-1], abs=1e-15)


def test_optimizer_is_deterministic():
    opts = G.GrapeOptions(tol=1e-6, max_iter=30)
    a = G.grape_optimize(G.not_problem(), seed=5, omega_max=G.NOT_OMEGA_MAX, options=opts)
    b = G.grape_optimize(G.not_problem(), seed=5, omega_max=G.NOT_OMEGA_MAX, options=opts)
    assert a.trace == b.trace
    assert np.array_equal(a.field.amplitudes, b.field.amplitudes)


def test_init_at_optimum_returns_immediately():
    p = G.not_problem(n_steps=4)
    res = G.grape_optimize(p, init=G.ControlField(np.tile([math.pi, 0.0], (4, 1))))
    assert res.iterations == 0 and res.converged
    assert res.trace == [pytest.approx(1.0, abs=1e-12)]


def test_bounds_are_respected():
    opts = G.GrapeOptions(tol=1e-6, max_iter=200, bounds=4.0)
    res = G.grape_optimize(G.not_problem(), seed=1, omega_max=G.NOT_OMEGA_MAX, options=opts)
    assert np.max(np.abs(res.field.amplitudes)) <= 4.0
    assert np.all(np.diff(res.trace) >= 0)
    # pi over 1 s needs |u| = pi on average, which fits within 4
    assert res.fidelity >= 1 - 1e-6


def test_iteration_cap_reports_non_convergence():
    res = G.grape_optimize(G.cnot_problem(k=2), seed=0, omega_max=G.CNOT_OMEGA_MAX, options=G.GrapeOptions(max_iter=2, tol=1e-3))
    assert res.iterations == 2 and not res.converged
    assert len(res.trace) == 3


def test_cnot_preset():
    p = G.cnot_problem(k=2)
    assert p.duration == pytest.approx(0.02)
    assert np.allclose(p.h0, 2 * math.pi * 50 * np.kron(SZ, SZ) / 4)
    assert np.allclose(p.controls[3], np.kron(np.eye(2), SY / 2))
    res = G.grape_optimize(p, seed=0, omega_max=G.CNOT_OMEGA_MAX, options=G.GrapeOptions(tol=1e-3))
    assert res.converged and res.fidelity >= 0.999
    assert np.all(np.diff(res.trace) >= 0)
