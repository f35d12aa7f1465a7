"""Adaptive finite-element simulation of shear- and gravity-driven droplet pinch-off.

A one-dimensional slender-jet model in the unknowns ``(u, h, s)`` is solved
with mixed P1 elements on a domain that follows the droplet tip. The
mismatch between the mixed slope ``s`` and the broken gradient of ``h``
drives adaptive bisection.
"""

from ._backend import BACKEND, HAVE_NUMBA
from .amr import MarkSet, RefinementExhausted, mark_doerfler, mark_max, refine_cycle
from .assembly import DiscreteSystem, Forcing, apply_boundary_conditions, assemble
from .estimator import ErrorField, effectivity, error_bounds, estimate
from .mesh import Mesh1D, MeshError, bisect, build_uniform, grow_domain
from .physics import InterfacePoint, SingularCurvatureError, curvature, detect_pinch
from .properties import FluidPair, PropertyError
from .state import State
from .timeloop import NonConvergence, RunConfig, RunReport, SingularMatrix, advance_length, newton_solve, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "HAVE_NUMBA",
    "MarkSet", "RefinementExhausted", "mark_doerfler", "mark_max", "refine_cycle",
    "DiscreteSystem", "Forcing", "apply_boundary_conditions", "assemble",
    "ErrorField", "effectivity", "error_bounds", "estimate",
    "Mesh1D", "MeshError", "bisect", "build_uniform", "grow_domain",
    "InterfacePoint", "SingularCurvatureError", "curvature", "detect_pinch",
    "FluidPair", "PropertyError", "State",
    "NonConvergence", "RunConfig", "RunReport", "SingularMatrix", "advance_length", "newton_solve", "run",
]
