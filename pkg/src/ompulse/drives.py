"""Periodic control fields: Gaussian pulse trains, (square-)sinusoidal
drives, a regularized delta kick, and user-tabulated signals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KINDS = ("gaussian_train", "sinusoidal", "square_sinusoidal", "delta_pulse", "tabulated")

# Gaussian tails beyond this many widths are below double precision.
GAUSS_CUTOFF = 8.0


@dataclass(frozen=True)
class DriveSpec:
    """Tagged description of a periodic control field.

    kind:    one of gaussian_train | sinusoidal | square_sinusoidal |
             delta_pulse | tabulated
    e0:      amplitude (for delta_pulse: the integrated pulse area)
    t_s:     pulse separation (gaussian_train) or kick time (delta_pulse)
    sigma:   Gaussian width (gaussian_train, delta_pulse)
    omega:   drive frequency (sinusoidal, square_sinusoidal)
    samples: ordered (time, value) pairs for tabulated drives
    period_hint: declared period for tabulated drives
    """

    kind: str
    e0: float = 0.0
    t_s: float | None = None
    sigma: float | None = None
    omega: float | None = None
    samples: tuple | None = None
    period_hint: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError("unknown drive kind %r" % (self.kind,))
        if self.e0 < 0:
            raise ValueError("e0 must be non-negative")
        if self.kind == "gaussian_train":
            if not (self.t_s and self.t_s > 0 and self.sigma and self.sigma > 0):
                raise ValueError("gaussian_train needs t_s > 0 and sigma > 0")
        elif self.kind in ("sinusoidal", "square_sinusoidal"):
            if not (self.omega and self.omega > 0):
                raise ValueError("%s needs omega > 0" % self.kind)
        elif self.kind == "delta_pulse":
            if not (self.t_s and self.t_s > 0):
                raise ValueError("delta_pulse needs t_s > 0")
            if self.sigma is not None and self.sigma <= 0:
                raise ValueError("delta_pulse sigma must be positive")
        elif self.kind == "tabulated":
            if self.samples is None or len(self.samples) < 2:
                raise ValueError("tabulated drive needs >= 2 (time, value) samples")

    @property
    def delta_sigma(self) -> float:
        """Regularization width of the delta kick (default t_s/200)."""
        return self.sigma if self.sigma is not None else self.t_s / 200.0


def period(spec: DriveSpec) -> float:
    """Fundamental period of the drive."""
    if spec.kind in ("gaussian_train", "delta_pulse"):
        return 2.0 * spec.t_s
    if spec.kind == "sinusoidal":
        return 2.0 * math.pi / spec.omega
    if spec.kind == "square_sinusoidal":
        return math.pi / spec.omega
    if spec.period_hint is None:
        raise ValueError("tabulated drive has no declared period")
    return spec.period_hint


def evaluate(spec: DriveSpec, t):
    """Drive amplitude E(t); accepts scalars or arrays."""
    if spec.kind == "sinusoidal":
        return spec.e0 * np.sin(spec.omega * t)
    if spec.kind == "square_sinusoidal":
        return spec.e0 * np.sin(spec.omega * t) ** 2
    if spec.kind == "gaussian_train":
        return _gaussian_train(spec, t)
    if spec.kind == "delta_pulse":
        sig = spec.delta_sigma
        norm = spec.e0 / (sig * math.sqrt(2.0 * math.pi))
        return norm * np.exp(-((t - spec.t_s) ** 2) / (2.0 * sig * sig))
    table = np.asarray(spec.samples, dtype=float)
    return np.interp(t, table[:, 0], table[:, 1])


def _gaussian_train(spec: DriveSpec, t):
    """Sum of Gaussians centered at odd multiples of t_s, n >= 1.

    Only centers within GAUSS_CUTOFF widths of t contribute.
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    t_s, sig, e0 = spec.t_s, spec.sigma, spec.e0
    lo = np.min(t) - GAUSS_CUTOFF * sig
    hi = np.max(t) + GAUSS_CUTOFF * sig
    n_lo = max(1, int(math.floor(lo / t_s)))
    if n_lo % 2 == 0:
        n_lo -= 1
    n_lo = max(1, n_lo)
    n_hi = int(math.ceil(hi / t_s))
    if n_hi % 2 == 0:
        n_hi += 1
    out = np.zeros_like(t)
    for n in range(n_lo, n_hi + 1, 2):
        out += np.exp(-((t - n * t_s) ** 2) / (2.0 * sig * sig))
    out *= e0
    return float(out[0]) if scalar else out
