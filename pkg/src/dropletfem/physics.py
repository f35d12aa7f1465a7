"""Pointwise curvature evaluations and pinch-off detection.

Every curvature here uses the mixed slope ``s`` in place of ``dh/dz`` and
``ds/dz`` in place of ``d2h/dz2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mesh import Mesh1D
from .state import State


class SingularCurvatureError(ArithmeticError):
    """Curvature requested where the radius is not positive."""


@dataclass(frozen=True)
class InterfacePoint:
    h: float
    s: float
    dsdz: float


def _check_radius(h):
    if np.any(np.asarray(h) <= 0):
        raise SingularCurvatureError("curvature is singular for h <= 0")


def curvature(p: InterfacePoint):
    """Mean curvature ``1/(h sqrt(1+s^2)) - s_z / (1+s^2)^(3/2)``.

    Works elementwise when the fields of ``p`` are arrays.
    """
    _check_radius(p.h)
    q = 1.0 + np.square(p.s)
    return 1.0 / (p.h * np.sqrt(q)) - p.dsdz / q**1.5


def curvature_gradient_terms(p: InterfacePoint):
    """Split ``dK/dz`` into the bulk part and the part that is integrated by parts.

    Returns ``(bulk, flux)`` with ``dK/dz = bulk - d(flux)/dz`` once ``dh/dz``
    is replaced by ``s``.
    """
    _check_radius(p.h)
    q = 1.0 + np.square(p.s)
    bulk = -p.s * p.dsdz / (p.h * q**1.5) - p.s / (p.h**2 * np.sqrt(q))
    flux = p.dsdz / q**1.5
    return bulk, flux


def nodal_curvature(mesh: Mesh1D, state: State) -> np.ndarray:
    """Curvature at nodes, with ``ds/dz`` averaged from adjacent elements.

    Used for output only. Non-positive radii (the tip node) yield NaN.
    """
    dz = mesh.element_sizes
    ds = np.diff(state.s) / dz
    dsdz = np.empty(mesh.n_nodes)
    dsdz[0], dsdz[-1] = ds[0], ds[-1]
    # length-weighted average is the derivative of the P1 interpolant's
    # best linear fit through the two neighbouring elements
    dsdz[1:-1] = (ds[:-1] * dz[1:] + ds[1:] * dz[:-1]) / (dz[:-1] + dz[1:])
    h = np.asarray(state.h, dtype=float)
    out = np.full(mesh.n_nodes, np.nan)
    ok = h > 0
    out[ok] = curvature(InterfacePoint(h[ok], state.s[ok], dsdz[ok]))
    return out


def detect_pinch(
    state: State,
    mesh: Mesh1D,
    exclusion_fraction: float = 0.05,
    threshold: float = 2.5e-5,
) -> Optional[tuple[float, float]]:
    """Locate the thinnest interior neck and report it if below ``threshold``.

    Only nodes with ``zeta`` in ``[f, 1-f]`` are considered, so the inlet
    and the (small by construction) tip are excluded. Returns
    ``(z_pinch, h_min)`` or ``None``.
    """
    if not 0 <= exclusion_fraction < 0.5:
        raise ValueError("exclusion_fraction must lie in [0, 0.5)")
    zeta = mesh.ref_coords
    h = np.asarray(state.h)
    inner = np.flatnonzero((zeta >= exclusion_fraction) & (zeta <= 1.0 - exclusion_fraction))
    inner = inner[(inner > 0) & (inner < h.size - 1)]
    if inner.size == 0:
        return None
    is_min = (h[inner] <= h[inner - 1]) & (h[inner] <= h[inner + 1])
    cand = inner[is_min]
    if cand.size == 0:
        return None
    k = cand[np.argmin(h[cand])]
    if h[k] < threshold:
        return float(zeta[k] * state.L), float(h[k])
    return None
