"""Loop geometry, regime classification, and plateau detection."""
import math

import numpy as np
import pytest

from ompulse import DriveSpec, OmParams, integrate
from ompulse.analysis import (DegenerateSignalError, LoopCurve,
                              classify_storing, count_self_intersections,
                              cycle_metrics, delta_pulse_analytic_area,
                              detect_jumps, form_factor, loop_area,
                              loop_perimeter, mean_form_factor,
                              normalize, verify_delta_pulse)
from ompulse.drives import period


def circle(n=1000, r=1.0, phase=0.0):
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False) + phase
    return LoopCurve(x=r * np.cos(th), y=r * np.sin(th))


def test_circle_area_perimeter():
    c = circle()
    assert loop_area(c) == pytest.approx(math.pi, rel=1e-4)
    assert loop_perimeter(c) == pytest.approx(2.0 * math.pi, rel=1e-4)


def test_circle_form_factor():
    assert form_factor(circle()) == pytest.approx(1.0, abs=1e-3)
    assert count_self_intersections(circle()) == 0


def test_memoryless_segment():
    # y = x traversed out and back: zero area, perimeter 2 sqrt 2, F = 0
    x = np.concatenate([np.linspace(0, 1, 101), np.linspace(1, 0, 101)[1:-1]])
    seg = LoopCurve(x=x, y=x.copy())
    assert loop_area(seg) == pytest.approx(0.0, abs=1e-12)
    assert loop_perimeter(seg) == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-12)
    assert form_factor(seg) == 0.0


def test_lemniscate_single_node():
    # figure-eight: one transverse crossing, two equal lobes
    t = np.linspace(0.0, 2.0 * math.pi, 2000, endpoint=False)
    curve = LoopCurve(x=np.sin(2.0 * t), y=np.sin(t))
    assert count_self_intersections(curve) == 1
    # the pinched ceiling: two lobes cannot beat F = 0.5
    assert form_factor(curve) <= 0.5


def test_pinched_lobes_both_counted():
    # two tangent unit circles traced as one curve through the pinch;
    # the lobe areas add instead of cancelling by orientation
    t = np.linspace(0.0, 2.0 * math.pi, 1000, endpoint=False)
    x = np.concatenate([1.0 - np.cos(t), np.cos(t) - 1.0])
    y = np.concatenate([np.sin(t), np.sin(t)])
    curve = LoopCurve(x=x, y=y)
    assert loop_area(curve) == pytest.approx(2.0 * math.pi, rel=1e-3)
    assert form_factor(curve) == pytest.approx(0.5, rel=1e-3)


def test_orientation_invariance():
    c = circle()
    rev = LoopCurve(x=c.x[::-1].copy(), y=c.y[::-1].copy())
    assert loop_area(rev) == pytest.approx(loop_area(c), rel=1e-6)
    assert form_factor(rev) == pytest.approx(form_factor(c), rel=1e-6)


def test_resampling_invariance():
    a = circle(n=1000, phase=0.0)
    b = circle(n=1733, phase=0.37)
    assert loop_area(b) == pytest.approx(loop_area(a), rel=1e-5)
    assert form_factor(b) == pytest.approx(form_factor(a), rel=1e-5)


def test_isoperimetric_bound_random_curves():
    # smooth random closed curves from low-order Fourier series
    rng = np.random.default_rng(17)
    t = np.linspace(0.0, 2.0 * math.pi, 600, endpoint=False)
    for _ in range(1000):
        x = np.zeros_like(t)
        y = np.zeros_like(t)
        for k in range(1, 5):
            x += rng.normal() / k * np.cos(k * t) + rng.normal() / k * np.sin(k * t)
            y += rng.normal() / k * np.cos(k * t) + rng.normal() / k * np.sin(k * t)
        f = form_factor(LoopCurve(x=x, y=y))
        assert 0.0 <= f <= 1.0


def test_ellipse_form_factor_below_circle():
    t = np.linspace(0.0, 2.0 * math.pi, 1200, endpoint=False)
    f = form_factor(LoopCurve(x=2.0 * np.cos(t), y=np.sin(t)))
    # 4 pi A / P^2 with A = 2 pi and the elliptic perimeter ~ 9.6884
    assert f == pytest.approx(4.0 * math.pi * 2.0 * math.pi / 9.688448 ** 2,
                              rel=1e-3)


def test_normalize_splits_cycles():
    spec = DriveSpec(kind="sinusoidal", e0=100.0, omega=1.0)
    traj = integrate(OmParams(), spec, horizon=3.0 * period(spec))
    curves = normalize(traj)
    assert len(curves) == 3
    assert [c.cycle_index for c in curves] == [1, 2, 3]
    assert max(np.max(np.abs(c.x)) for c in curves) == pytest.approx(1.0)
    for c in curves:
        assert np.max(np.abs(c.x)) <= 1.0 and np.max(np.abs(c.y)) <= 1.0


def test_normalize_skip_cycles():
    spec = DriveSpec(kind="sinusoidal", e0=100.0, omega=1.0)
    traj = integrate(OmParams(), spec, horizon=5.0 * period(spec))
    curves = normalize(traj, skip_cycles=2)
    assert len(curves) == 3
    assert curves[0].cycle_index == 3


def test_normalize_degenerate():
    spec = DriveSpec(kind="sinusoidal", e0=0.0, omega=1.0)
    traj = integrate(OmParams(), spec, horizon=period(spec))
    with pytest.raises(DegenerateSignalError):
        normalize(traj)


def test_storing_classification_synthetic():
    t = np.linspace(0.0, 2.0 * math.pi, 500, endpoint=False)
    # loop through the origin region with vanishing output there
    pinched = LoopCurve(x=0.5 * (1.0 - np.cos(t)), y=0.5 * (1.0 - np.cos(t)) ** 2)
    assert classify_storing(pinched) == "non-storing"
    # output stays high when the input returns to zero
    offset = LoopCurve(x=0.5 * (1.0 - np.cos(t)), y=0.6 + 0.3 * np.sin(t))
    assert classify_storing(offset) == "storing"
    # input never near zero
    biased = LoopCurve(x=0.6 + 0.3 * np.cos(t), y=np.sin(t))
    assert classify_storing(biased) == "indeterminate"


def test_storing_classification_simulated():
    p = OmParams()
    gauss = DriveSpec(kind="gaussian_train", e0=1e6, t_s=5.0, sigma=0.5)
    traj = integrate(p, gauss, horizon=2.0 * period(gauss))
    assert classify_storing(normalize(traj)[-1]) == "non-storing"
    sq = DriveSpec(kind="square_sinusoidal", e0=1e6, omega=0.075 * 20.0)
    traj = integrate(p, sq, horizon=3.0 * period(sq))
    assert classify_storing(normalize(traj, skip_cycles=1)[-1]) == "storing"


def test_cycle_metrics_bundle():
    m = cycle_metrics(circle())
    assert m.area == pytest.approx(math.pi, rel=1e-4)
    assert m.n_intersections == 0
    assert m.form_factor == pytest.approx(1.0, abs=1e-3)
    assert m.closed


def test_mean_form_factor_prefers_closed():
    a = cycle_metrics(circle())
    b = type(a)(cycle_index=2, area=0.0, perimeter=1.0, form_factor=0.0,
                n_intersections=0, storing="indeterminate", closed=False)
    assert mean_form_factor([a, b]) == pytest.approx(a.form_factor)
    assert mean_form_factor([a, b], include_open=True) \
        == pytest.approx(0.5 * a.form_factor)


def test_detect_jumps_staircase():
    # three noisy levels separated by clean jumps
    rng = np.random.default_rng(23)
    series = np.concatenate([
        lvl * (1.0 + 0.01 * rng.normal(size=400))
        for lvl in (1.0, 2.0, 8.0)
    ])
    report = detect_jumps(series, window=100)
    assert report.n_plateaus == 3
    levels = [p[2] for p in report.plateaus]
    assert levels == pytest.approx([1.0, 2.0, 8.0], rel=0.05)
    assert report.jump_windows == [4, 8]


def test_detect_jumps_smooth_ramp():
    series = np.linspace(1.0, 1000.0, 2000)
    report = detect_jumps(series, window=100)
    assert report.n_plateaus <= 1


def test_detect_jumps_needs_ten_windows():
    with pytest.raises(ValueError):
        detect_jumps(np.ones(99), window=10)


def test_delta_pulse_analytic_area_scaling():
    p = OmParams(g_m=0.0)
    a1 = delta_pulse_analytic_area(p, e0=1.0, t_s=2.0)
    a2 = delta_pulse_analytic_area(p, e0=2.0, t_s=2.0)
    assert a2 / a1 == pytest.approx(8.0)  # cubic in the kick area
    weak = OmParams(kappa=1e-9, g_m=0.0, omega_m=1e-12, quality=1e4)
    assert delta_pulse_analytic_area(weak, 1.0, 2.0) \
        == pytest.approx(0.0, abs=1e-6)


def test_delta_pulse_numeric_cubic_scaling():
    # the simulated loop area inherits the cubic amplitude scaling even
    # at finite regularization width
    p = OmParams(g_m=0.0)
    a = verify_delta_pulse(p, e0=1.0, t_s=2.0, sigma_fracs=(1 / 25, 1 / 50))
    b = verify_delta_pulse(p, e0=2.0, t_s=2.0, sigma_fracs=(1 / 25, 1 / 50))
    assert b.areas_by_sigma[-1] / a.areas_by_sigma[-1] == pytest.approx(8.0, rel=1e-3)
    assert a.closure_ok


def test_delta_pulse_closure_warning():
    with pytest.warns(UserWarning):
        verify_delta_pulse(OmParams(g_m=0.0, kappa=0.1), e0=1.0, t_s=2.0,
                           sigma_fracs=(1 / 25,))
