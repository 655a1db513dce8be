"""Geometric memory metrics of input-output loops.

A trajectory is cut into drive cycles; each cycle gives a normalized
closed curve in the (input, output) plane whose area, perimeter, form
factor, self-intersection count, and energy-storing classification
quantify the memory content.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import drives, integrator
from .model import OmParams

FOUR_PI = 4.0 * math.pi

# Endpoint gap (fraction of bounding-box diagonal) below which a cycle
# counts as closed.
CLOSURE_TOL = 1e-3
# Segment-crossing tolerances in normalized units.
CROSSING_TOL = 1e-9
CLUSTER_TOL = 1e-4


class DegenerateSignalError(ValueError):
    """Input or output is identically zero over the analysis window."""


@dataclass(frozen=True)
class LoopCurve:
    """One cycle of the normalized input-output trajectory."""

    x: np.ndarray
    y: np.ndarray
    cycle_index: int = 1
    closed: bool = True

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have equal length")

    def __len__(self):
        return len(self.x)


@dataclass(frozen=True)
class CycleMetrics:
    cycle_index: int
    area: float
    perimeter: float
    form_factor: float
    n_intersections: int
    storing: str  # "storing" | "non-storing" | "indeterminate"
    closed: bool = True


def _select_output(traj: integrator.Trajectory, output):
    if isinstance(output, str):
        if output == "photon":
            return traj.n_photon
        if output == "phonon":
            return traj.n_phonon
        raise ValueError("unknown output selector %r" % (output,))
    arr = np.asarray(output, dtype=float)
    if arr.shape != traj.times.shape:
        raise ValueError("custom output column has wrong length")
    return arr


def normalize(traj: integrator.Trajectory, output="photon",
              skip_cycles: int = 0) -> list[LoopCurve]:
    """Split a trajectory into per-cycle loops in normalized units.

    Both axes are divided by their maximum absolute value over the full
    analysis window so that successive cycles are geometrically
    comparable. The first `skip_cycles` cycles are dropped before the
    maxima are taken, so a strong start-up transient does not squash the
    settled loops.
    """
    T = traj.period
    dt = traj.sample_dt
    per_cycle = int(round(T / dt))
    start = skip_cycles * per_cycle
    if start >= len(traj.times) - 1:
        raise ValueError("skip_cycles leaves no samples to analyze")
    x = traj.drive[start:]
    y = _select_output(traj, output)[start:]
    x_max = float(np.max(np.abs(x)))
    y_max = float(np.max(np.abs(y)))
    if x_max == 0.0 or y_max == 0.0:
        raise DegenerateSignalError("input or output is identically zero")
    xn = x / x_max
    yn = y / y_max
    n_cycles = int(math.floor((len(x) - 1) / per_cycle))
    curves = []
    for k in range(n_cycles):
        lo = k * per_cycle
        hi = lo + per_cycle + 1  # include the cycle endpoint
        cx, cy = xn[lo:hi], yn[lo:hi]
        gap = math.hypot(cx[0] - cx[-1], cy[0] - cy[-1])
        diag = math.hypot(np.ptp(cx), np.ptp(cy))
        closed = diag > 0 and gap < CLOSURE_TOL * diag
        curves.append(LoopCurve(x=cx, y=cy, cycle_index=skip_cycles + k + 1,
                                closed=closed))
    return curves


def _cyclic(curve: LoopCurve) -> tuple[np.ndarray, np.ndarray]:
    """Curve points with any duplicated closing point removed."""
    x, y = curve.x, curve.y
    if len(x) > 1 and x[0] == x[-1] and y[0] == y[-1]:
        return x[:-1], y[:-1]
    return x, y


def _shoelace(x: np.ndarray, y: np.ndarray) -> float:
    """Signed area of a closed polygon, cross-checked in both circulation
    forms of Green's theorem (x dy vs -y dx)."""
    a_xdy = 0.5 * np.sum(x * (np.roll(y, -1) - np.roll(y, 1)))
    a_ydx = 0.5 * np.sum(y * (np.roll(x, -1) - np.roll(x, 1)))
    a1, a2 = abs(a_xdy), abs(a_ydx)
    if max(a1, a2) > 0 and abs(a1 - a2) > 1e-6 * max(a1, a2) + 1e-15:
        raise AssertionError("Green's theorem circulation forms disagree")
    return float(a_xdy)


def _crossings(x: np.ndarray, y: np.ndarray):
    """Transverse crossings between non-adjacent segments of the closed
    polyline, as (i, j, t, u, px, py) with j > i + 1."""
    n = len(x)
    x2, y2 = np.append(x, x[0]), np.append(y, y[0])
    ax, ay = x2[:-1], y2[:-1]
    dx, dy = np.diff(x2), np.diff(y2)
    found = []
    for i in range(n - 2):
        j0 = i + 2
        j1 = n if i > 0 else n - 1  # exclude the cyclic adjacency (0, n-1)
        if j0 >= j1:
            continue
        j = np.arange(j0, j1)
        denom = dx[i] * dy[j] - dy[i] * dx[j]
        qpx = ax[j] - ax[i]
        qpy = ay[j] - ay[i]
        with np.errstate(all="ignore"):
            t = (qpx * dy[j] - qpy * dx[j]) / denom
            u = (qpx * dy[i] - qpy * dx[i]) / denom
        # Endpoint hits are kept: a pinch point falling exactly on a
        # sample vertex is still a transverse crossing. Non-adjacent
        # segments share no vertex, so this creates no false positives;
        # duplicates from vertex-coincident hits are merged downstream.
        hit = (np.abs(denom) > CROSSING_TOL) \
            & (t > -CROSSING_TOL) & (t < 1.0 + CROSSING_TOL) \
            & (u > -CROSSING_TOL) & (u < 1.0 + CROSSING_TOL)
        for jj, tt, uu in zip(j[hit], t[hit], u[hit]):
            found.append((i, int(jj), float(tt), float(uu),
                          float(ax[i] + tt * dx[i]), float(ay[i] + tt * dy[i])))
    return found


def _simple_loops(x: np.ndarray, y: np.ndarray, depth: int = 0):
    """Decompose a closed polyline into simple loops at its first
    transverse self-intersection, recursively."""
    if depth > 64 or len(x) < 4:
        return [(x, y)]
    for i, j, t, u, px, py in _crossings(x, y):
        # sub-loop between the two crossing segments, plus the remainder
        sub_x = np.concatenate([[px], x[i + 1:j + 1], [px]])
        sub_y = np.concatenate([[py], y[i + 1:j + 1], [py]])
        rem_x = np.concatenate([x[:i + 1], [px], x[j + 1:]])
        rem_y = np.concatenate([y[:i + 1], [py], y[j + 1:]])
        return (_simple_loops(sub_x[:-1], sub_y[:-1], depth + 1)
                + _simple_loops(rem_x, rem_y, depth + 1))
    return [(x, y)]


def loop_area(curve: LoopCurve) -> float:
    """Geometric loop area via the discrete Green's theorem.

    The traced polygon is split into simple loops at its transverse
    self-intersections and the absolute signed areas of the pieces are
    summed. For a simple closed curve this is exactly |circulation|; for
    pinched (memristive) loops it counts both lobes instead of letting
    their opposite orientations cancel. Open curves are closed by the
    straight chord implied by the cyclic indexing.
    """
    x, y = _cyclic(curve)
    if len(x) < 3:
        raise ValueError("need at least 3 distinct points")
    return float(sum(abs(_shoelace(px, py))
                     for px, py in _simple_loops(x, y) if len(px) >= 3))


def loop_perimeter(curve: LoopCurve) -> float:
    """Polyline length over one cycle, including the closing chord."""
    x, y = _cyclic(curve)
    if len(x) < 2:
        raise ValueError("need at least 2 points")
    return float(np.sum(np.hypot(np.diff(np.append(x, x[0])),
                                 np.diff(np.append(y, y[0])))))


def form_factor(curve: LoopCurve) -> float:
    """Isoperimetric ratio 4 pi A / P^2, clamped to [0, 1]."""
    p = loop_perimeter(curve)
    if p == 0.0:
        raise ValueError("zero-perimeter curve")
    f = FOUR_PI * loop_area(curve) / (p * p)
    if f > 1.0 + 1e-6:
        warnings.warn("form factor %.6g exceeds the isoperimetric bound" % f)
    return min(max(f, 0.0), 1.0)


def count_self_intersections(curve: LoopCurve) -> int:
    """Transverse crossings between non-adjacent polyline segments.

    Exhaustive segment-pair tests; crossings closer than CLUSTER_TOL to
    each other are merged into one.
    """
    x, y = _cyclic(curve)
    if len(x) < 4:
        raise ValueError("need at least 4 points")
    points = [(px, py) for _, _, _, _, px, py in _crossings(x, y)]
    if not points:
        return 0
    clusters: list[tuple[float, float]] = []
    for px, py in points:
        for cx, cy in clusters:
            if math.hypot(px - cx, py - cy) < CLUSTER_TOL:
                break
        else:
            clusters.append((px, py))
    return len(clusters)


def classify_storing(curve: LoopCurve, eps_x: float = 0.02,
                     eps_y: float = 0.02) -> str:
    """Energy-storing classification of a normalized loop.

    Non-storing if the output drops to ~0 somewhere the input is ~0;
    storing if the output stays finite at every near-zero input sample;
    indeterminate if the input never comes near zero.
    """
    near_zero = np.abs(curve.x) < eps_x
    if not np.any(near_zero):
        return "indeterminate"
    if float(np.min(curve.y[near_zero])) < eps_y:
        return "non-storing"
    return "storing"


def cycle_metrics(curve: LoopCurve, eps_x: float = 0.02,
                  eps_y: float = 0.02) -> CycleMetrics:
    return CycleMetrics(
        cycle_index=curve.cycle_index,
        area=loop_area(curve),
        perimeter=loop_perimeter(curve),
        form_factor=form_factor(curve),
        n_intersections=count_self_intersections(curve),
        storing=classify_storing(curve, eps_x, eps_y),
        closed=curve.closed,
    )


@dataclass(frozen=True)
class PlateauReport:
    """Plateau structure of a windowed-median series."""

    medians: np.ndarray          # one median per window
    plateaus: list[tuple[int, int, float]]  # (first window, last window, level)
    jump_windows: list[int]      # window index right after a >20% jump

    @property
    def n_plateaus(self) -> int:
        return len(self.plateaus)


def detect_jumps(series: np.ndarray, window: int,
                 plateau_tol: float = 0.05,
                 jump_tol: float = 0.20) -> PlateauReport:
    """Find plateaus and jumps in a (phonon-number) time series.

    The series is reduced to one median per window of `window` samples;
    maximal runs of >= 2 windows whose consecutive medians differ by less
    than `plateau_tol` (relative) are plateaus, and relative changes
    above `jump_tol` are recorded as jumps.
    """
    series = np.asarray(series, dtype=float)
    n_win = len(series) // window
    if n_win < 10:
        raise ValueError("need at least 10 full windows")
    medians = np.array([
        np.median(series[k * window:(k + 1) * window]) for k in range(n_win)
    ])
    floor = 1e-12 * max(float(np.max(np.abs(medians))), 1e-300)
    plateaus = []
    jumps = []
    run_start = 0
    for k in range(1, n_win):
        rel = abs(medians[k] - medians[k - 1]) / max(
            abs(medians[k]), abs(medians[k - 1]), floor)
        if rel < plateau_tol:
            continue
        if k - run_start >= 2:
            plateaus.append((run_start, k - 1,
                             float(np.median(medians[run_start:k]))))
        if rel > jump_tol:
            jumps.append(k)
        run_start = k
    if n_win - run_start >= 2:
        plateaus.append((run_start, n_win - 1,
                         float(np.median(medians[run_start:]))))
    return PlateauReport(medians=medians, plateaus=plateaus, jump_windows=jumps)


@dataclass(frozen=True)
class DeltaPulseCheck:
    numeric_area: float
    analytic_area: float
    relative_error: float
    areas_by_sigma: tuple
    closure_ok: bool


def delta_pulse_analytic_area(params: OmParams, e0: float, t_s: float) -> float:
    """Closed-form loop area of the delta-kick (drive, cavity-energy) cycle."""
    k = params.kappa
    return 2.0 * math.sqrt(2.0) * k * params.omega_c * e0 ** 3 * math.exp(-2.0 * k * t_s)


def verify_delta_pulse(params: OmParams, e0: float, t_s: float,
                       sigma_fracs=(1 / 50, 1 / 100, 1 / 200)) -> DeltaPulseCheck:
    """Compare the simulated delta-kick loop area against the closed form.

    Simulates the regularized kick at decreasing widths, computes the
    unnormalized loop area of (E(t), cavity energy) over one period, and
    extrapolates sigma -> 0. The regularized area carries a symmetric
    contribution that grows as 1/sigma (the input peak diverges while the
    up/down output imbalance stays finite), so the extrapolation
    eliminates the 1/sigma term first (Richardson in 1/sigma), then the
    remaining linear-in-sigma error.
    """
    if params.g_m != 0.0:
        params = replace(params, g_m=0.0)
    closure_ok = 4.0 * params.kappa * t_s > 4.0  # 2 kappa T >> 1
    if not closure_ok:
        warnings.warn("2 kappa T is not large; the delta-pulse loop "
                      "does not close and the area check is unreliable")
    areas = []
    for frac in sigma_fracs:
        sig = t_s * frac
        spec = drives.DriveSpec(kind="delta_pulse", e0=e0, t_s=t_s, sigma=sig)
        traj = integrator.integrate(params, spec, horizon=2.0 * t_s)
        y = params.omega_c * traj.n_photon
        curve = LoopCurve(x=traj.drive, y=y, closed=False)
        areas.append(loop_area(curve))
    # With sigma halving at each level, A = a/sigma + b + c sigma gives
    # b + O(sigma) from 2*A(sigma) - A(sigma/2); a second level removes
    # the remaining linear term.
    lvl1 = [2.0 * areas[i] - areas[i + 1] for i in range(len(areas) - 1)]
    if len(lvl1) >= 2:
        numeric = 2.0 * lvl1[-1] - lvl1[-2]
    elif lvl1:
        numeric = lvl1[-1]
    else:
        numeric = areas[-1]
    analytic = delta_pulse_analytic_area(params, e0, t_s)
    if analytic != 0.0:
        rel = abs(numeric - analytic) / abs(analytic)
    else:
        rel = abs(numeric)
    return DeltaPulseCheck(numeric_area=float(numeric), analytic_area=analytic,
                           relative_error=float(rel),
                           areas_by_sigma=tuple(areas), closure_ok=closure_ok)


METRICS_CSV_HEADER = "cycle,area,perimeter,form_factor,n_intersections,storing"


def metrics_to_csv(path, metrics: list[CycleMetrics], mean_form_factor: float):
    with open(path, "w") as fh:
        fh.write(METRICS_CSV_HEADER + "\n")
        for m in metrics:
            fh.write("%d,%.17g,%.17g,%.17g,%d,%s\n" % (
                m.cycle_index, m.area, m.perimeter, m.form_factor,
                m.n_intersections, m.storing))
        fh.write("# mean_form_factor=%.17g\n" % mean_form_factor)


def mean_form_factor(metrics: list[CycleMetrics],
                     include_open: bool = False) -> float:
    """Cycle-averaged form factor; open (non-closing) cycles excluded by
    default."""
    vals = [m.form_factor for m in metrics if include_open or m.closed]
    if not vals:
        vals = [m.form_factor for m in metrics]
    return float(np.mean(vals))
