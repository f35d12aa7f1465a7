"""Discrete residual and analytic Jacobian of the mixed weak form.

Per node the residual carries three rows: momentum (tested with the P1 hat
function), interface advection, and the L2 projection ``s = dh/dz``.
Time derivatives are backward differences at fixed reference coordinate
with the ALE correction ``-w df/dz``, ``w = zeta dL/dt``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .kernels import BAND, N_PARAMS, P_A1, P_A2, P_BODY, P_DLDT, P_GR, P_IDT, P_L, P_NU, P_TIP
from .kernels import assemble_arrays, gauss_unit
from .mesh import Mesh1D
from .physics import SingularCurvatureError
from .properties import FluidPair, body_acceleration, viscosity_ratio_terms
from .state import State

TIP_MODELS = ("epsilon", "none", "dirichlet")


@dataclass
class DiscreteSystem:
    """Residual vector plus Jacobian in LAPACK band storage (5 sub/5 super)."""

    residual: np.ndarray
    jacobian: np.ndarray

    @property
    def size(self) -> int:
        return self.residual.size

    def dense(self) -> np.ndarray:
        n = self.size
        J = np.zeros((n, n))
        for k in range(-BAND, BAND + 1):
            # ab[BAND + r - c, c] = J[r, c]; diagonal offset k = c - r
            row = BAND - k
            if k >= 0:
                idx = np.arange(n - k)
                J[idx, idx + k] = self.jacobian[row, idx + k]
            else:
                idx = np.arange(-k, n)
                J[idx, idx + k] = self.jacobian[row, idx + k]
        return J

    def matvec(self, x: np.ndarray) -> np.ndarray:
        n = self.size
        y = np.zeros(n)
        for k in range(-BAND, BAND + 1):
            row = BAND - k
            if k >= 0:
                y[: n - k] += self.jacobian[row, k:] * x[k:]
            else:
                y[-k:] += self.jacobian[row, : n + k] * x[: n + k]
        return y

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return solve_banded((BAND, BAND), self.jacobian, rhs, overwrite_ab=False, check_finite=False)

    def set_dirichlet(self, row: int, value_minus_target: float) -> None:
        n = self.size
        lo, hi = max(0, row - BAND), min(n, row + BAND + 1)
        cols = np.arange(lo, hi)
        self.jacobian[BAND + row - cols, cols] = 0.0
        self.jacobian[BAND, row] = 1.0
        self.residual[row] = value_minus_target


@dataclass(frozen=True)
class Forcing:
    """Manufactured source terms added to the momentum and interface rows.

    Both callables take ``(z, t)`` arrays and return arrays of the same shape.
    """

    momentum: Callable[[np.ndarray, float], np.ndarray]
    interface: Callable[[np.ndarray, float], np.ndarray]


def model_parameters(fp: FluidPair, inv_dt: float, dLdt: float, L: float, tip_flux: bool) -> np.ndarray:
    a1, a2 = viscosity_ratio_terms(fp)
    prm = np.zeros(N_PARAMS)
    prm[P_GR] = fp.gamma / fp.rho_d
    prm[P_NU] = fp.nu_d
    prm[P_A1] = a1
    prm[P_A2] = a2
    prm[P_BODY] = body_acceleration(fp)
    prm[P_IDT] = inv_dt
    prm[P_DLDT] = dLdt
    prm[P_L] = L
    prm[P_TIP] = 1.0 if tip_flux else 0.0
    return prm


def assemble(
    state: State,
    state_old: State,
    dt: float,
    mesh: Mesh1D,
    fp: FluidPair,
    quad_order: int = 3,
    *,
    forcing: Optional[Forcing] = None,
    tip_flux: bool = True,
    backend: Optional[str] = None,
) -> DiscreteSystem:
    """Assemble residual and Jacobian for one implicit step.

    ``state.L`` is the domain length at the new time level; the mesh only
    contributes reference coordinates. ``dt = inf`` drops the time
    derivative and gives the steady problem.
    """
    if state.n_nodes != mesh.n_nodes or state_old.n_nodes != mesh.n_nodes:
        raise ValueError("state, old state and mesh must share the node count")
    if not dt > 0:
        raise ValueError("dt must be positive")
    inv_dt = 0.0 if np.isinf(dt) else 1.0 / dt
    dLdt = (state.L - state_old.L) * inv_dt
    prm = model_parameters(fp, inv_dt, dLdt, state.L, tip_flux)
    qx, qw = gauss_unit(quad_order)
    ne = mesh.n_elements
    if forcing is None:
        fu = fh = np.zeros((ne, qx.size))
    else:
        zq = state.L * ((1.0 - qx)[None, :] * mesh.ref_coords[:-1, None] + qx[None, :] * mesh.ref_coords[1:, None])
        fu = np.ascontiguousarray(forcing.momentum(zq, state.t), dtype=float)
        fh = np.ascontiguousarray(forcing.interface(zq, state.t), dtype=float)
    res, ab, bad = assemble_arrays(
        mesh.ref_coords, state.u, state.h, state.s, state_old.u, state_old.h,
        prm, qx, qw, fu, fh, backend=backend,
    )
    if bad >= 0:
        raise SingularCurvatureError(f"non-positive radius at a quadrature point of element {bad}")
    return DiscreteSystem(res, ab)


def apply_boundary_conditions(
    sys: DiscreteSystem,
    state: State,
    fp: FluidPair,
    tip_model: str = "epsilon",
    *,
    eps_tip: Optional[float] = None,
    inlet: Optional[tuple[float, float]] = None,
    tip_values: Optional[tuple[float, float]] = None,
) -> DiscreteSystem:
    """Replace inlet and tip rows by Dirichlet conditions, in place.

    Inlet: ``u = u_in``, ``h = h_in`` (or the pair given in ``inlet``).
    Tip models: ``"epsilon"`` pins ``h(tip) = eps_tip`` (default
    ``1e-3 h_in``); ``"dirichlet"`` pins ``u`` and ``h`` at the far end to
    ``tip_values`` (used for fixed-domain verification); ``"none"`` leaves
    the tip rows alone. ``s`` never carries an essential condition.
    """
    if tip_model not in TIP_MODELS:
        raise ValueError(f"tip_model must be one of {TIP_MODELS}")
    u0, h0 = inlet if inlet is not None else (fp.u_in, fp.h_in)
    sys.set_dirichlet(0, state.u[0] - u0)
    sys.set_dirichlet(1, state.h[0] - h0)
    last = state.n_nodes - 1
    if tip_model == "epsilon":
        eps = 1e-3 * fp.h_in if eps_tip is None else eps_tip
        sys.set_dirichlet(3 * last + 1, state.h[last] - eps)
    elif tip_model == "dirichlet":
        if tip_values is None:
            raise ValueError("tip_model 'dirichlet' needs tip_values=(u, h)")
        sys.set_dirichlet(3 * last, state.u[last] - tip_values[0])
        sys.set_dirichlet(3 * last + 1, state.h[last] - tip_values[1])
    return sys


def project_slope(mesh: Mesh1D, h: np.ndarray) -> np.ndarray:
    """L2 projection of the broken gradient of ``h`` onto continuous P1."""
    dz = mesh.element_sizes
    hz = np.diff(h) / dz
    n = mesh.n_nodes
    ab = np.zeros((3, n))
    ab[1, :-1] += dz / 3.0
    ab[1, 1:] += dz / 3.0
    ab[0, 1:] = dz / 6.0
    ab[2, :-1] = dz / 6.0
    rhs = np.zeros(n)
    rhs[:-1] += 0.5 * dz * hz
    rhs[1:] += 0.5 * dz * hz
    return solve_banded((1, 1), ab, rhs)


def droplet_volume(mesh: Mesh1D, h: np.ndarray, z_from: float = 0.0) -> float:
    """``pi * int h^2 dz`` over ``[z_from, L]``, exact for P1 ``h``.

    ``z_from`` is snapped to the containing element and integrated from
    there exactly by splitting that element.
    """
    z = mesh.z
    a, b = h[:-1], h[1:]
    dz = np.diff(z)
    per = dz * (a * a + a * b + b * b) / 3.0
    if z_from <= 0.0:
        return float(np.pi * per.sum())
    k = int(np.searchsorted(z, z_from, side="right") - 1)
    k = min(max(k, 0), mesh.n_elements - 1)
    hk = np.interp(z_from, z, h)
    tail = (z[k + 1] - z_from) * (hk * hk + hk * h[k + 1] + h[k + 1] ** 2) / 3.0
    return float(np.pi * (tail + per[k + 1:].sum()))
