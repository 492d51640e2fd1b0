import math

import numpy as np
import pytest

from artifact import qcore as q
from artifact import sequences as s
from artifact.channels import phase_damping_1q
from artifact.qcore import SX, SZ

PLUS_SUB = s.SubspaceSpec(1, (s.PLUS,))


def _leak(h, sched, env=4):
    return s.subspace_leakage_highprec(h, sched, [s.PLUS], env, dps=50)


# ---- timing generators ----------------------------------------------------------


def test_udd_times_examples():
    assert s.udd_times(1, 1.0) == pytest.approx([0.5], abs=1e-15)
    assert s.udd_times(2, 3.0) == pytest.approx([0.75, 2.25], abs=1e-14)
    t4 = s.udd_times(4, 1.0)
    assert t4 == pytest.approx([math.sin(j * math.pi / 10) ** 2 for j in range(1, 5)], abs=1e-15)
    # symmetric about T/2
    t5 = np.array(s.udd_times(5, 2.0))
    assert np.allclose(t5 + t5[::-1], 2.0, atol=1e-14)
    with pytest.raises(ValueError):
        s.udd_times(0, 1.0)


def test_cpmg_schedule():
    sch = s.cpmg_schedule(4, 0.2)
    assert sch.cycle_duration == pytest.approx(0.8)
    assert sch.times == pytest.approx([0.1, 0.3, 0.5, 0.7])
    assert sch.intervals() == pytest.approx([0.1, 0.2, 0.2, 0.2, 0.1])
    assert sch.pulse_counts() == {"PI(0)": 4}


def test_udd_schedule_operators():
    sch = s.udd_schedule(3, 1.0, axis_phase=math.pi / 2, n_qubits=2, targets=(2,))
    (label,) = sch.pulse_counts()
    u = sch.operator_table[label]
    assert np.allclose(u, np.kron(np.eye(2), q.rotation_pulse(math.pi, math.pi / 2)), atol=1e-15)
    assert sch.dim == 4


def test_schedule_validation():
    with pytest.raises(ValueError):
        s.PulseSchedule(1.0, (s.PulseEvent(1.5, "X"),), {"X": SX})
    with pytest.raises(ValueError):
        s.PulseSchedule(1.0, (s.PulseEvent(0.5, "Y"),), {"X": SX})
    with pytest.raises(ValueError):
        s.PulseSchedule(1.0, (), {"A": 2 * SX})
    with pytest.raises(ValueError):
        s.PulseSchedule(1.0, (), {"A": SX, "B": np.eye(4)})


def test_events_are_sorted_and_repeated():
    sch = s.PulseSchedule(1.0, (s.PulseEvent(0.7, "X"), s.PulseEvent(0.2, "X")), {"X": SX})
    assert sch.times == [0.2, 0.7]
    rep = sch.repeated(3)
    assert rep.cycle_duration == 3.0
    assert rep.times == pytest.approx([0.2, 0.7, 1.2, 1.7, 2.2, 2.7])


def test_text_round_trip():
    sch = s.xy_schedule("XY8S", 0.013, n_qubits=2)
    back = s.PulseSchedule.from_text(sch.to_text(), sch.operator_table)
    assert back.cycle_duration == sch.cycle_duration
    assert back.events == sch.events
    with pytest.raises(ValueError):
        s.PulseSchedule.from_text("0.1\tX\t0.0\t\n", {"X": SX})


def test_equal_spacing_and_from_intervals():
    sch = s.equal_spacing_schedule(3, 2.0, SX, "X")
    assert sch.times == pytest.approx([0.5, 1.0, 1.5])
    sch2 = s.schedule_from_intervals([0.1, 0.6, 0.3], ["X", "X"], 2.0, {"X": SX})
    assert sch2.times == pytest.approx([0.2, 1.4])
    with pytest.raises(ValueError):
        s.schedule_from_intervals([0.5, 0.5], ["X", "X"], 1.0, {"X": SX})


def test_xy_and_kdd_structure():
    xy4 = s.xy_schedule("XY4S", 1.0)
    assert [e.phase for e in xy4.events] == pytest.approx([0, math.pi / 2, 0, math.pi / 2])
    assert len(s.xy_schedule("xy16s", 1.0).events) == 16
    kdd = s.kdd_schedule(0.5)
    assert len(kdd.events) == 20
    assert kdd.cycle_duration == pytest.approx(10.0)
    assert [math.degrees(e.phase) for e in kdd.events[:10]] == pytest.approx(list(s.KDD_PHASES_DEG))
    with pytest.raises(ValueError):
        s.xy_schedule("XY5", 1.0)


@pytest.mark.parametrize(
    "sched",
    [s.xy_schedule("XY4S", 1.0), s.xy_schedule("XY8S", 1.0), s.xy_schedule("XY16S", 1.0), s.kdd_schedule(1.0), s.cpmg_schedule(2, 1.0)],
    ids=["XY4S", "XY8S", "XY16S", "KDD", "CPMG2"],
)
def test_ideal_cycles_are_identity_up_to_phase(sched):
    u = sched.cycle_unitary_ideal()
    # unitary_distance is the phase-insensitive overlap, 1 for equal gates
    assert q.unitary_distance(u, np.eye(2)) >= 1 - 1e-12


# ---- subspaces, J and super-Zeno ----------------------------------------------------


def test_subspace_spec():
    sub = s.SubspaceSpec.from_labels("01", "10")
    assert np.allclose(np.diag(sub.projector()), [0, 1, 1, 0])
    assert np.allclose(np.diag(sub.complement().projector()), [1, 0, 0, 1])
    with pytest.raises(ValueError):
        s.SubspaceSpec(1, (np.array([1, 1]),))
    with pytest.raises(ValueError):
        s.SubspaceSpec(2, (np.array([1, 0]),))


def test_build_J_examples():
    assert np.allclose(s.build_J(s.SubspaceSpec.from_labels("0")), -SZ)
    assert np.allclose(s.build_J(PLUS_SUB), -SX)
    j = s.build_J(s.SubspaceSpec.from_labels("01", "10"))
    assert np.allclose(j, np.diag([1, -1, -1, 1]))
    assert np.allclose(j @ j, np.eye(4))


def test_super_zeno_intervals():
    iv = s.super_zeno_intervals()
    assert iv == pytest.approx([0.0954915, 0.25, 0.3090170, 0.25, 0.0954915], abs=1e-7)
    assert sum(iv) == pytest.approx(1.0, abs=1e-15)
    assert s.SZ_BETA == pytest.approx((3 - math.sqrt(5)) / 8, abs=1e-15)
    sch = s.super_zeno_schedule(PLUS_SUB, 2.0)
    assert sch.intervals() == pytest.approx([2 * x for x in iv])
    assert sch.pulse_counts() == {"J": 4}


def test_super_zeno_recursive_structure():
    assert s.super_zeno_recursive_times(0, 1.0) == []
    assert s.super_zeno_recursive_times(1, 1.0) == pytest.approx([0.5])
    assert s.super_zeno_recursive_times(2, 1.0) == pytest.approx([0.25, 0.75])
    assert s.super_zeno_recursive_times(3, 1.0) == pytest.approx([0.125, 0.375, 0.5, 0.625, 0.875])
    for m in range(1, 8):
        assert len(s.super_zeno_recursive_times(m, 1.0)) == s.super_zeno_pulse_count(m)
    times = s.super_zeno_recursive_times(5, 1.0)
    assert times == sorted(times)


# ---- NUDD ------------------------------------------------------------------------


def test_nudd_constants():
    d = s.nudd_deltas()
    assert len(d) == 27
    assert sum(d) == pytest.approx(1.0, abs=1e-15)
    sch = s.nudd_schedule(1.0)
    assert sch.pulse_counts() == {"X0": 18, "X1": 6, "XPHI": 2}


def test_nudd_operators_are_reflections():
    ops = s.nudd_operators()
    for u in ops.values():
        assert np.allclose(u @ u, np.eye(4))
        assert np.allclose(u, u.conj().T)
    assert np.allclose(np.diag(ops["X0"]), [1, -1, 1, 1])
    assert np.allclose(np.diag(ops["X1"]), [1, 1, -1, 1])
    # XPHI swaps |01> and |10>
    assert np.allclose(ops["XPHI"][1:3, 1:3], -SX)


def test_nudd_nested_times():
    outer, middle, inner = s.nudd_times_nested(2, 1.0)
    assert outer == pytest.approx([0.25, 0.75])
    assert middle[0] == pytest.approx([0.0625, 0.1875])
    assert len(inner) == 3 and all(len(x) == 3 for x in inner)
    assert inner[0][0] == pytest.approx([0.0625 / 4, 0.0625 * 3 / 4])
    # every layer lies inside its parent interval
    ends = [0.0] + outer + [1.0]
    for j in range(3):
        assert all(ends[j] < x < ends[j + 1] for x in middle[j])


def _reduced_fidelity(h, sched, psi, env=2):
    rho = np.kron(np.outer(psi, psi.conj()), np.eye(env) / env)
    out = s.simulate_protected(sched.extended(env), rho, h)[0].matrix
    red = q.partial_trace(out, {1, 2}).matrix
    return float(np.vdot(psi, red @ psi).real)


@pytest.mark.parametrize("t", [0.05, 0.1, 0.3, 1.0])
def test_nudd_beats_free_evolution(t):
    h = s.toy_three_axis_hamiltonian()
    rng = np.random.default_rng(5)
    for _ in range(2):
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi = np.zeros(4, dtype=complex)
        psi[1:3] = a / np.linalg.norm(a)
        f_nudd = _reduced_fidelity(h, s.nudd_schedule(t), psi)
        f_free = _reduced_fidelity(h, s.free_schedule(t, 4), psi)
        assert f_nudd > f_free
        assert 1 - f_nudd < 1e-4


# ---- simulation ------------------------------------------------------------------


def test_hahn_echo_refocuses_static_detuning():
    h = 2 * math.pi * 37.0 * SZ / 2
    sch = s.cpmg_schedule(1, 0.3)
    rho = np.outer(s.PLUS, s.PLUS.conj())
    out = s.simulate_protected(sch, rho, h)[0].matrix
    # one pi_x pulse maps |+> to itself up to phase, so the echo restores it
    assert np.max(np.abs(out - rho)) <= 1e-12
    free = s.simulate_protected(s.free_schedule(0.3, 2), rho, h)[0].matrix
    assert np.max(np.abs(free - rho)) > 0.1


def test_pulses_do_not_undo_markovian_dephasing():
    sch = s.cpmg_schedule(4, 0.05)
    rho = np.outer(s.PLUS, s.PLUS.conj())
    out = s.simulate_protected(sch, rho, lambda t: phase_damping_1q(3.0, t))[0].matrix
    assert abs(out[0, 1]) == pytest.approx(0.5 * math.exp(-3.0 * 0.2), abs=1e-12)


def test_simulate_multiple_cycles_and_dimension_check():
    sch = s.cpmg_schedule(2, 0.1)
    out = s.simulate_protected(sch, np.eye(2) / 2, 0.3 * SZ, n_cycles=3)
    assert len(out) == 3
    with pytest.raises(ValueError):
        s.simulate_protected(sch, np.eye(4) / 4)
    with pytest.raises(ValueError):
        s.simulate_protected(sch, np.eye(2) / 2, n_cycles=0)


def test_flip_angle_error_operator():
    sch = s.cpmg_schedule(1, 1.0)
    e = sch.events[0]
    assert np.allclose(sch.operator(e, 0.1), q.rotation_pulse(1.1 * math.pi, 0.0), atol=1e-14)
    j = s.SubspaceSpec.from_labels("0")
    sz = s.super_zeno_schedule(j, 1.0)
    u = sz.operator(sz.events[0], 0.0)
    assert np.allclose(u, s.build_J(j))
    # over-rotated reflection: exp(i pi (1 + eps) P)
    eps = 0.2
    assert np.allclose(sz.operator(sz.events[0], eps), np.diag([np.exp(1j * math.pi * (1 + eps)), 1]))


def test_flip_error_robustness_ranking():
    states = [np.array([1, 0]), s.PLUS, np.array([1, 1j]) / math.sqrt(2)]
    scheds = {
        "CPMG": s.cpmg_schedule(4, 1.0),
        "XY4S": s.xy_schedule("XY4S", 1.0),
        "XY8S": s.xy_schedule("XY8S", 1.0),
        "XY16S": s.xy_schedule("XY16S", 1.0),
        "KDD": s.kdd_schedule(1.0),
    }
    err = {}
    for name, sch in scheds.items():
        vals = []
        for psi in states:
            out = s.simulate_protected(sch, np.outer(psi, psi.conj()), None, n_cycles=80 // len(sch.events), flip_angle_error=0.02)
            vals.append(1 - np.vdot(psi, out[-1].matrix @ psi).real)
        err[name] = float(np.mean(vals))
    assert err["CPMG"] > err["XY4S"] > err["XY8S"] > max(err["XY16S"], err["KDD"])
    assert err["KDD"] < 1e-10


def test_leakage_fraction_examples():
    q_sub = PLUS_SUB.complement()
    assert s.leakage_fraction(np.outer(s.PLUS, s.PLUS.conj()), q_sub) == pytest.approx(0.0, abs=1e-15)
    assert s.leakage_fraction(np.eye(2) / 2, q_sub) == pytest.approx(0.5)
    assert s.leakage_fraction(q.ket("0").projector(), q_sub) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        s.leakage_fraction(np.eye(4) / 4, q_sub)


# ---- toy bath and scaling -----------------------------------------------------------


def test_toy_hamiltonians():
    h = s.toy_dephasing_hamiltonian()
    assert h.shape == (8, 8)
    assert np.allclose(h, h.conj().T)
    assert np.linalg.norm(h, 2) == pytest.approx(1.0)
    assert np.allclose(h, s.toy_dephasing_hamiltonian())
    h3 = s.toy_three_axis_hamiltonian()
    assert h3.shape == (8, 8) and np.linalg.norm(h3, 2) == pytest.approx(1.0)


def test_highprec_leakage_matches_double_precision():
    h = s.toy_dephasing_hamiltonian()
    sch = s.udd_schedule(1, 0.8)
    rho = np.kron(np.outer(s.PLUS, s.PLUS.conj()), np.eye(4) / 4)
    out = s.simulate_protected(sch.extended(4), rho, h)[0].matrix
    q_full = np.kron(PLUS_SUB.complement().projector(), np.eye(4))
    assert _leak(h, sch) == pytest.approx(np.trace(q_full @ out).real, abs=1e-13)


def test_loglog_slope():
    xs = [1e-3, 1e-2, 1e-1]
    assert s.loglog_slope(xs, [x**3 * 7 for x in xs]) == pytest.approx(3.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_udd_leakage_scaling(n):
    h = s.toy_dephasing_hamiltonian()
    ts = np.logspace(-3, -1, 4)
    slope = s.loglog_slope(ts, [_leak(h, s.udd_schedule(n, float(t))) for t in ts])
    assert abs(slope - (2 * n + 2)) <= 0.1


def test_equal_spacing_odd_even_scaling():
    h = s.toy_dephasing_hamiltonian()
    ts = np.logspace(-3, -1, 4)
    x_pi = q.rotation_pulse(math.pi, 0.0)
    slopes = [s.loglog_slope(ts, [_leak(h, s.equal_spacing_schedule(n, float(t), x_pi, "X")) for t in ts]) for n in (1, 2)]
    assert slopes == pytest.approx([4.0, 2.0], abs=0.1)


def test_super_zeno_beats_equal_spacing():
    h = s.toy_dephasing_hamiltonian()
    sz = _leak(h, s.super_zeno_schedule(PLUS_SUB, 1e-2))
    eq = _leak(h, s.equal_spacing_schedule(4, 1e-2, s.build_J(PLUS_SUB)))
    assert sz < 1e-20
    assert eq == pytest.approx(1.05e-6, rel=0.02)


@pytest.mark.parametrize("m,order", [(1, 4), (2, 6), (3, 8)])
def test_recursive_super_zeno_scaling(m, order):
    h = s.toy_dephasing_hamiltonian()
    ts = np.logspace(-3, -1.5, 3)
    vals = [_leak(h, s.super_zeno_recursive(m, float(t), PLUS_SUB)) for t in ts]
    assert abs(s.loglog_slope(ts, vals) - order) <= 0.15
