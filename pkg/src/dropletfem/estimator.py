"""Slope-recovery error estimate.

The mixed slope ``s`` is continuous, the broken gradient of ``h`` is not;
their element-wise L2 mismatch ``eta_K`` measures the discretisation error
of the interface slope.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .kernels import element_eta_squared, gauss_unit
from .mesh import Mesh1D
from .state import State


@dataclass(frozen=True, eq=False)
class ErrorField:
    eta_per_element: np.ndarray
    eta_global: float
    timestamp: float = 0.0

    def __post_init__(self):
        eta = np.array(self.eta_per_element, dtype=float, copy=True)
        eta.setflags(write=False)
        object.__setattr__(self, "eta_per_element", eta)

    @classmethod
    def from_values(cls, eta, timestamp: float = 0.0) -> "ErrorField":
        eta = np.asarray(eta, dtype=float)
        if np.any(eta < 0):
            raise ValueError("element indicators must be non-negative")
        return cls(eta, float(np.sqrt(np.sum(eta * eta))), timestamp)

    @property
    def n_elements(self) -> int:
        return self.eta_per_element.size


def estimate(state: State, mesh: Mesh1D, quad_order: int = 3, *, backend: Optional[str] = None) -> ErrorField:
    """Per-element ``||s - dh/dz||_{L2(K)}`` in physical coordinates.

    The integrand is quadratic on each element, so any ``quad_order >= 2``
    integrates it exactly.
    """
    qx, qw = gauss_unit(quad_order)
    eta2 = element_eta_squared(mesh.ref_coords, state.h, state.s, state.L, qx, qw, backend=backend)
    eta2 = np.maximum(eta2, 0.0)
    return ErrorField(np.sqrt(eta2), float(np.sqrt(eta2.sum())), state.t)


def error_bounds(eta_global: float, c: float) -> tuple[float, float]:
    """Two-sided bound ``eta/(1+c) <= ||e|| <= eta/(1-c)``.

    Valid only when the recovered slope beats the broken gradient by a
    factor ``c`` in ``(0, 1)``.
    """
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    return eta_global / (1.0 + c), eta_global / (1.0 - c)


def slope_errors(
    state: State, mesh: Mesh1D, truth_slope: Callable[[np.ndarray], np.ndarray], quad_order: int = 6
) -> tuple[float, float]:
    """L2 norms ``(||truth - dh/dz||, ||truth - s||)`` over the domain."""
    qx, qw = gauss_unit(quad_order)
    zeta = mesh.ref_coords
    dz = state.L * np.diff(zeta)
    zq = state.L * ((1.0 - qx)[None, :] * zeta[:-1, None] + qx[None, :] * zeta[1:, None])
    sq = (1.0 - qx)[None, :] * state.s[:-1, None] + qx[None, :] * state.s[1:, None]
    hz = (np.diff(state.h) / dz)[:, None]
    truth = truth_slope(zq)
    e_broken = np.sqrt(np.sum(dz * ((truth - hz) ** 2 @ qw)))
    e_mixed = np.sqrt(np.sum(dz * ((truth - sq) ** 2 @ qw)))
    return float(e_broken), float(e_mixed)


def effectivity(
    state: State, mesh: Mesh1D, truth_slope: Callable[[np.ndarray], np.ndarray], quad_order: int = 6
) -> float:
    """Ratio of the estimate to the true broken-gradient error.

    A value of 0 means ``s`` coincides with the broken gradient, which the
    estimator cannot distinguish from an exact solution.
    """
    e_broken, _ = slope_errors(state, mesh, truth_slope, quad_order)
    if e_broken == 0.0:
        raise ZeroDivisionError("true slope error is zero; effectivity undefined")
    return estimate(state, mesh).eta_global / e_broken


def empirical_c(
    state: State, mesh: Mesh1D, truth_slope: Callable[[np.ndarray], np.ndarray], quad_order: int = 6
) -> float:
    """Measured ``||truth - s|| / ||truth - dh/dz||``."""
    e_broken, e_mixed = slope_errors(state, mesh, truth_slope, quad_order)
    if e_broken == 0.0:
        raise ZeroDivisionError("true slope error is zero")
    return e_mixed / e_broken
