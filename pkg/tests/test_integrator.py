"""Time evolution, trajectory containers, and the non-local response checks."""
import math

import numpy as np
import pytest

from ompulse import DriveSpec, IntegratorConfig, OmParams, Trajectory, integrate
from ompulse.drives import evaluate, period
from ompulse.integrator import (IntegrationError, _causal_convolution,
                                integral_representation_check)
from ompulse.model import MeanFieldState


def test_zero_drive_fixed_point():
    spec = DriveSpec(kind="sinusoidal", e0=0.0, omega=1.0)
    traj = integrate(OmParams(), spec, horizon=3.0 * period(spec))
    assert np.max(np.abs(traj.states)) == 0.0
    assert np.max(traj.n_photon) == 0.0


def test_closed_form_linear_response():
    # g_m = 0, resonant sinusoidal drive: the cavity amplitude quadrature
    # obeys a first-order linear ODE with known solution
    p = OmParams(g_m=0.0)
    e0, om = 3.0, 1.7
    spec = DriveSpec(kind="sinusoidal", e0=e0, omega=om)
    traj = integrate(p, spec, horizon=3.0 * period(spec))
    k = p.kappa
    t = traj.times
    exact = math.sqrt(2.0) * e0 * (
        k * np.sin(om * t) - om * np.cos(om * t) + om * np.exp(-k * t)
    ) / (k * k + om * om)
    err = np.max(np.abs(traj.states[:, 0] - exact)) / np.max(np.abs(exact))
    assert err < 1e-9 * 1e2
    assert np.max(np.abs(traj.states[:, 1])) < 1e-9  # P_c never driven


def test_decay_between_pulses():
    # narrow pulses separated by many cavity lifetimes: the photonic
    # quadratures die out in each cycle tail
    spec = DriveSpec(kind="gaussian_train", e0=1e6, t_s=5.0, sigma=0.5)
    traj = integrate(OmParams(), spec, horizon=3.0 * period(spec))
    amp = np.hypot(traj.states[:, 0], traj.states[:, 1])
    peak = np.max(amp)
    dt = traj.sample_dt
    for center in (5.0, 15.0):  # pulse centers at odd multiples of t_s
        lo = int(round(center / dt))
        hi = int(round((center + 10.0) / dt))
        assert np.min(amp[lo:hi]) < 1e-3 * peak


def test_horizon_must_cover_one_period():
    spec = DriveSpec(kind="sinusoidal", e0=1.0, omega=1.0)
    with pytest.raises(ValueError):
        integrate(OmParams(), spec, horizon=0.5 * period(spec))


def test_initial_state_honoured():
    p = OmParams(g_m=0.0, delta=0.0)
    spec = DriveSpec(kind="sinusoidal", e0=0.0, omega=1.0)
    init = MeanFieldState(x_c=2.0, p_c=0.0, x_m=0.0, p_m=0.0)
    traj = integrate(p, spec, init=init, horizon=period(spec))
    # undriven cavity quadrature decays at kappa
    exact = 2.0 * np.exp(-p.kappa * traj.times)
    assert np.max(np.abs(traj.states[:, 0] - exact)) < 1e-8


def test_tolerance_halving_self_consistency():
    spec = DriveSpec(kind="gaussian_train", e0=1e4, t_s=5.0, sigma=0.5)
    p = OmParams()
    base = IntegratorConfig(rel_tol=1e-8)
    tight = IntegratorConfig(rel_tol=0.5e-8)
    a = integrate(p, spec, horizon=2.0 * period(spec), cfg=base)
    b = integrate(p, spec, horizon=2.0 * period(spec), cfg=tight)
    scale = np.max(np.abs(a.states))
    assert np.max(np.abs(a.states - b.states)) / scale < 10.0 * 1e-8


def test_sampling_grid():
    spec = DriveSpec(kind="sinusoidal", e0=1.0, omega=2.0)
    traj = integrate(OmParams(), spec, horizon=period(spec))
    assert len(traj.times) == 2001
    assert traj.times[0] == 0.0
    assert traj.sample_dt == pytest.approx(period(spec) / 2000.0)
    assert np.allclose(traj.drive, evaluate(spec, traj.times))


def test_energy_injection_positive():
    # a non-negative drive does positive net work on the vacuum state
    for spec in (DriveSpec(kind="gaussian_train", e0=10.0, t_s=5.0, sigma=0.5),
                 DriveSpec(kind="square_sinusoidal", e0=10.0, omega=1.0)):
        traj = integrate(OmParams(), spec, horizon=period(spec))
        work = np.trapezoid(traj.drive * traj.states[:, 0], traj.times)
        assert work > 0.0


def test_csv_round_trip(tmp_path):
    spec = DriveSpec(kind="sinusoidal", e0=2.0, omega=1.3)
    traj = integrate(OmParams(), spec, horizon=period(spec))
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    back = Trajectory.from_csv(path)
    assert back.period == traj.period
    assert np.allclose(back.states, traj.states, rtol=0, atol=0)
    assert np.allclose(back.n_photon, traj.n_photon)


def test_causal_convolution_against_quadrature():
    # exponential-kernel recurrence vs direct trapezoid of the same integral
    rng = np.random.default_rng(5)
    dt = 0.01
    f = rng.normal(size=400)
    t = np.arange(len(f)) * dt
    out = _causal_convolution(f, 1.7, dt)
    for i in (1, 50, 399):
        kernel = np.exp(-1.7 * (t[i] - t[:i + 1]))
        direct = np.trapezoid(f[:i + 1] * kernel, dx=dt)
        assert out[i] == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_integral_representation_zero_drive():
    spec = DriveSpec(kind="sinusoidal", e0=0.0, omega=1.0)
    traj = integrate(OmParams(), spec, horizon=period(spec))
    assert integral_representation_check(traj, OmParams(), spec) == (0.0, 0.0)


def test_integral_representation_driven():
    p = OmParams()
    spec = DriveSpec(kind="gaussian_train", e0=1e4, t_s=5.0, sigma=0.5)
    traj = integrate(p, spec, horizon=2.0 * period(spec))
    dev_phot, dev_phon = integral_representation_check(traj, p, spec)
    assert dev_phot < 1e-3
    assert dev_phon < 1e-3


def test_integral_representation_needs_resonance():
    p = OmParams(delta=0.5)
    spec = DriveSpec(kind="sinusoidal", e0=1.0, omega=1.0)
    traj = integrate(p, spec, horizon=period(spec))
    with pytest.raises(ValueError):
        integral_representation_check(traj, p, spec)


def test_nonuniform_grid_rejected():
    times = np.array([0.0, 0.1, 0.25, 0.3])
    with pytest.raises(ValueError):
        Trajectory(times=times, drive=np.zeros(4), states=np.zeros((4, 4)),
                   period=0.3)
