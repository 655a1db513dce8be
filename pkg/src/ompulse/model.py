"""Mean-field model of a driven, dissipative optomechanical cavity.

All rates and frequencies are expressed in units of the cavity damping
rate kappa; times are in units of 1/kappa.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class OmParams:
    """Physical constants of the cavity-mechanics system.

    delta:   detuning (cavity minus laser frequency)
    omega_m: mechanical frequency
    g_m:     optomechanical coupling
    kappa:   cavity damping rate (the unit rate)
    quality: mechanical quality factor; the mechanical damping rate is
             derived as omega_m / quality
    omega_c: cavity frequency, used only by the cavity-energy observable
    """

    delta: float = 0.0
    omega_m: float = 20.0
    g_m: float = 1e-5
    kappa: float = 1.0
    quality: float = 1e4
    omega_c: float = 20.0

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.omega_m <= 0:
            raise ValueError("omega_m must be positive")
        if self.quality <= 0:
            raise ValueError("quality must be positive")
        if self.g_m < 0:
            raise ValueError("g_m must be non-negative")
        if self.gamma_m >= 0.1 * self.kappa:
            warnings.warn(
                "mechanical damping gamma_m = %.3g is not small compared to "
                "kappa = %.3g; outside the usual sideband-resolved regime"
                % (self.gamma_m, self.kappa)
            )

    @property
    def gamma_m(self) -> float:
        """Mechanical damping rate omega_m / Q."""
        return self.omega_m / self.quality


def derive_gamma_m(params: OmParams) -> float:
    """Mechanical damping rate omega_m / Q."""
    return params.gamma_m


@dataclass(frozen=True)
class MeanFieldState:
    """Quadrature expectation values (X_c, P_c, X_m, P_m)."""

    x_c: float = 0.0
    p_c: float = 0.0
    x_m: float = 0.0
    p_m: float = 0.0

    @classmethod
    def vacuum(cls) -> "MeanFieldState":
        return cls(0.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, y) -> "MeanFieldState":
        return cls(float(y[0]), float(y[1]), float(y[2]), float(y[3]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x_c, self.p_c, self.x_m, self.p_m])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_array())))


def rhs(y, params: OmParams, e_t: float) -> np.ndarray:
    """Time derivative of the quadrature vector (X_c, P_c, X_m, P_m).

    The nonlinearity enters through the radiation-pressure terms
    proportional to g_m; the drive enters only the X_c equation.
    """
    x_c, p_c, x_m, p_m = y[0], y[1], y[2], y[3]
    k = params.kappa
    d = params.delta
    gm = params.g_m
    wm = params.omega_m
    gam = params.gamma_m
    return np.array([
        -k * x_c + d * p_c - SQRT2 * gm * x_m * p_c + SQRT2 * e_t,
        -k * p_c - d * x_c + SQRT2 * gm * x_m * x_c,
        -gam * x_m + wm * p_m,
        -gam * p_m - wm * x_m + gm / SQRT2 * (x_c * x_c + p_c * p_c),
    ])


def photon_number(state) -> float:
    """Mean photon number (X_c^2 + P_c^2)/2."""
    if isinstance(state, MeanFieldState):
        return 0.5 * (state.x_c ** 2 + state.p_c ** 2)
    return 0.5 * (state[0] ** 2 + state[1] ** 2)


def phonon_number(state) -> float:
    """Mean phonon number (X_m^2 + P_m^2)/2."""
    if isinstance(state, MeanFieldState):
        return 0.5 * (state.x_m ** 2 + state.p_m ** 2)
    return 0.5 * (state[2] ** 2 + state[3] ** 2)


class TooFewSamplesError(ValueError):
    pass


def _central_diff(f: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order central first and second derivatives on the interior.

    Returns (f', f'') on indices [2, n-3]; the two-point boundary layers
    are dropped rather than one-sided.
    """
    fm2, fm1, f0, fp1, fp2 = f[:-4], f[1:-3], f[2:-2], f[3:-1], f[4:]
    d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h)
    d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h)
    return d1, d2


def oscillator_residual(traj, params: OmParams) -> np.ndarray:
    """Pointwise residual of the driven damped oscillator identity.

    The mechanical displacement obeys
        X_m'' + 2 gamma_m X_m' + (omega_m^2 + gamma_m^2) X_m
            = sqrt(2) g_m omega_m <a^dag a>,
    exactly, along any solution of the mean-field equations. Derivatives
    are taken by fourth-order central finite differences, so the residual
    is reported on the interior samples only.
    """
    if len(traj.times) < 5:
        raise TooFewSamplesError("need at least 5 uniform samples")
    h = traj.times[1] - traj.times[0]
    x_m = traj.states[:, 2]
    d1, d2 = _central_diff(x_m, h)
    gam = params.gamma_m
    wm = params.omega_m
    force = SQRT2 * params.g_m * wm * traj.n_photon[2:-2]
    return d2 + 2.0 * gam * d1 + (wm * wm + gam * gam) * x_m[2:-2] - force


def oscillator_residual_norm(traj, params: OmParams) -> float:
    """Max-norm of the oscillator residual relative to its largest term."""
    if len(traj.times) < 5:
        raise TooFewSamplesError("need at least 5 uniform samples")
    h = traj.times[1] - traj.times[0]
    x_m = traj.states[:, 2]
    d1, d2 = _central_diff(x_m, h)
    gam = params.gamma_m
    wm = params.omega_m
    terms = [
        d2,
        2.0 * gam * d1,
        (wm * wm + gam * gam) * x_m[2:-2],
        SQRT2 * params.g_m * wm * traj.n_photon[2:-2],
    ]
    residual = terms[0] + terms[1] + terms[2] - terms[3]
    scale = max(float(np.max(np.abs(t))) for t in terms)
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(residual))) / scale
