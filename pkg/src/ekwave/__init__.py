"""Pseudospectral laboratory for capillary (quantum) fluids.

Core pieces: periodic Fourier grids and fields (:mod:`ekwave.grid`),
linear and bilinear multipliers (:mod:`ekwave.spectral`), constitutive
laws (:mod:`ekwave.laws`), state representations and normal form
(:mod:`ekwave.states`), time integrators (:mod:`ekwave.solver`), the
wave-function pathway (:mod:`ekwave.gp`), the planar model system
(:mod:`ekwave.toyode`), measurements (:mod:`ekwave.diagnostics`) and
the scenario harness (:mod:`ekwave.scenarios`, CLI ``ekwave``).
"""

from .errors import EkwaveError
from .grid import Field, FourierGrid
from .laws import ConstitutiveLaws
from .states import EKState, ExtendedState

__all__ = [
    "EkwaveError",
    "Field",
    "FourierGrid",
    "ConstitutiveLaws",
    "EKState",
    "ExtendedState",
]

__version__ = "1.0.0"
