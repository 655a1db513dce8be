"""Pulsed-cavity optomechanics memory simulator and optimizer."""

__version__ = "0.1.0"

from .model import MeanFieldState, OmParams, photon_number, phonon_number, rhs
from .drives import DriveSpec, evaluate, period
from .integrator import IntegratorConfig, Trajectory, integrate

__all__ = [
    "MeanFieldState", "OmParams", "photon_number", "phonon_number", "rhs",
    "DriveSpec", "evaluate", "period",
    "IntegratorConfig", "Trajectory", "integrate",
    "__version__",
]
