import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from optosync import meanfield
from optosync.errors import DivergenceError
from optosync.meanfield import (
    ClassicalTrajectory,
    detect_limit_cycle,
    integrate_mean_field,
    mean_field_rhs,
    phases,
    write_trajectory_csv,
)
from optosync.model import Bidirectional, DriveParams, with_topology


def short(cfg, t_end=5.0, dt=1e-3, stride=1):
    return replace(cfg, numerics=replace(cfg.numerics, dt=dt, t_transient=0.0, t_average=t_end, sample_stride=stride))


def coarse(cfg, dt=0.01):
    return replace(cfg, numerics=replace(cfg.numerics, dt=dt, sample_stride=10))


def test_rhs_matches_equations(bidi, rng):
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    aL, bL, aR, bR = z
    L, R, lam, E = bidi.left, bidi.right, bidi.topology.lam, bidi.drive.amplitude
    expect = [
        (-L.kappa + 1j * L.detuning + 1j * L.g * 2 * bL.real) * aL + 1j * lam * aR + E,
        (-L.gamma - 1j * L.omega_m) * bL + 1j * L.g * abs(aL) ** 2,
        (-R.kappa + 1j * R.detuning + 1j * R.g * 2 * bR.real) * aR + 1j * lam * aL + E,
        (-R.gamma - 1j * R.omega_m) * bR + 1j * R.g * abs(aR) ** 2,
    ]
    np.testing.assert_allclose(mean_field_rhs(z, bidi), expect, rtol=1e-14)


def test_rhs_unidirectional_link(uni, rng):
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    L, R = uni.left, uni.right
    link = 2 * math.sqrt(uni.topology.eta * L.kappa * R.kappa)
    expect_aR = (-R.kappa + 1j * R.detuning + 2j * R.g * z[3].real) * z[2] - link * z[0]
    assert mean_field_rhs(z, uni)[2] == pytest.approx(expect_aR, rel=1e-14)


def test_linear_cavity_closed_form(bidi):
    # g = 0, lambda = 0: each cavity is a driven damped oscillator
    osc = replace(bidi.left, g=0.0)
    cfg = short(replace(bidi, left=osc, right=replace(bidi.right, g=0.0), topology=Bidirectional(0.0)), 5.0)
    traj = integrate_mean_field(cfg, 5.0, detect=False)
    z = -osc.kappa + 1j * osc.detuning
    exact = -cfg.drive.amplitude / z * (1 - np.exp(z * traj.times))
    np.testing.assert_allclose(traj["alpha_L"], exact, rtol=1e-10, atol=1e-10)
    assert np.all(traj["beta_L"] == 0)


def test_rk4_fourth_order(bidi):
    finals = {}
    for dt in (0.04, 0.02, 0.01, 0.0025):
        cfg = short(bidi, 20.0, dt=dt, stride=int(round(20.0 / dt)))
        finals[dt] = integrate_mean_field(cfg, 20.0, detect=False).states[-1]
    ref = finals[0.0025]
    e1 = np.linalg.norm(finals[0.04] - ref)
    e2 = np.linalg.norm(finals[0.02] - ref)
    e3 = np.linalg.norm(finals[0.01] - ref)
    assert math.log2(e1 / e2) == pytest.approx(4.0, abs=0.3)
    assert math.log2(e2 / e3) == pytest.approx(4.0, abs=0.3)


def test_cold_start_and_sampling(bidi):
    traj = integrate_mean_field(short(bidi, 2.0, stride=10), 2.0, detect=False)
    assert np.all(traj.states[0] == 0)
    assert traj.times[1] == pytest.approx(0.01)
    assert len(traj.times) == 201


def test_decoupled_left_unaffected_by_right(bidi):
    base = short(with_topology(bidi, lam=0.0), 30.0)
    other = replace(base, right=replace(base.right, omega_m=1.3, kappa=0.3))
    a = integrate_mean_field(base, 30.0, detect=False)
    b = integrate_mean_field(other, 30.0, detect=False)
    assert np.array_equal(a.states[:, :2], b.states[:, :2])


def test_cascade_has_no_back_action(uni):
    base = short(uni, 30.0)
    other = replace(base, right=replace(base.right, omega_m=0.7, g=0.02))
    a = integrate_mean_field(base, 30.0, detect=False)
    b = integrate_mean_field(other, 30.0, detect=False)
    assert np.array_equal(a.states[:, :2], b.states[:, :2])
    assert not np.array_equal(a.states[:, 2:], b.states[:, 2:])


def test_t_end_must_cover_window(bidi):
    with pytest.raises(ValueError, match="shorter"):
        integrate_mean_field(bidi, 100.0)


def test_divergence_names_stage_and_time(bidi, monkeypatch):
    monkeypatch.setattr(meanfield, "DIVERGENCE_GUARD", 10.0)
    with pytest.raises(DivergenceError, match=r"mean-field integration diverged at t=") as info:
        integrate_mean_field(short(bidi, 5.0), 5.0, detect=False)
    assert 0 < info.value.time < 5.0


def test_limit_cycle_bidirectional(bidi):
    traj = integrate_mean_field(coarse(bidi), 3000.0)
    assert traj.converged
    assert 100 < traj.transient_end < 1000
    # locked oscillation near the mechanical frequency
    assert traj.period_estimate == pytest.approx(2 * math.pi, rel=0.01)
    assert traj.cycle.fft_period == pytest.approx(traj.period_estimate, rel=0.01)
    assert len(traj.section_times) > 400


def test_fixed_point_without_drive(bidi):
    cfg = coarse(replace(bidi, drive=DriveParams(0.0)))
    traj = integrate_mean_field(cfg, 3000.0)
    assert traj.converged and traj.cycle.fixed_point
    assert traj.period_estimate is None


def test_unconverged_when_tolerance_unreachable(bidi):
    traj = integrate_mean_field(coarse(bidi), 3000.0, detect=False)
    info = detect_limit_cycle(traj, tol=1e-18)
    assert not info.converged


def test_detect_needs_ten_periods(bidi):
    traj = integrate_mean_field(short(bidi, 20.0), 20.0, detect=False)
    with pytest.raises(ValueError, match="too short"):
        detect_limit_cycle(traj)


def test_dt_check_small(bidi):
    traj = integrate_mean_field(short(bidi, 20.0, dt=0.01, stride=10), 20.0, check_dt=True, detect=False)
    assert traj.dt_error < 1e-6


def test_phases_held_below_epsilon(bidi):
    t = np.arange(5.0)
    s = np.zeros((5, 4), dtype=complex)
    s[2:, 0] = [1j, -1, -1j]  # phase winds pi/2 per sample
    traj = ClassicalTrajectory(t, s, 1.0, 1, bidi)
    phi = phases(traj, epsilon=1e-6)
    np.testing.assert_allclose(phi[:, 0], [0, 0, math.pi / 2, math.pi, 3 * math.pi / 2])
    assert np.all(phi[:, 1:] == 0)


def test_phases_unwrapped_continuous(bidi):
    traj = integrate_mean_field(short(bidi, 50.0, stride=50), 50.0, detect=False)
    phi = phases(traj)
    assert np.abs(np.diff(phi[10:, 1])).max() < math.pi


def test_trajectory_csv(bidi, tmp_path):
    traj = integrate_mean_field(short(bidi, 1.0, stride=100), 1.0, detect=False)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "alpha_L_re", "alpha_L_im", "beta_L_re", "beta_L_im",
                       "alpha_R_re", "alpha_R_im", "beta_R_re", "beta_R_im"]
    assert len(rows) == 12
    assert complex(float(rows[-1][1]), float(rows[-1][2])) == traj.states[-1, 0]
