"""Manufactured-solution convergence study on a fixed domain.

A smooth steady pair ``(u*, h*)`` is substituted into the strong form; the
leftover is added as a source so that ``(u*, h*, dh*/dz)`` solves the
forced problem exactly. Solving on a sequence of halved meshes then gives
observed convergence rates, the estimator effectivity and the measured
ratio ``c = ||h*_z - s|| / ||h*_z - dh/dz||``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import sympy as sp

from .assembly import Forcing, project_slope
from .estimator import estimate, slope_errors
from .kernels import gauss_unit
from .mesh import Mesh1D, build_uniform
from .properties import FluidPair, body_acceleration, viscosity_ratio_terms
from .state import State
from .timeloop import newton_solve

# O(1) material numbers keep every term of the momentum balance comparable
MMS_FLUID = FluidPair(
    gamma=0.5, rho_d=1.0, mu_d=0.2, rho_c=0.1, mu_c=0.02,
    u_in=1.0, u_c=0.0, h_in=1.0, R_tube=10.0, g=1.0,
)
MMS_LENGTH = 1.0
BASE_ELEMENTS = 16


@dataclass(frozen=True)
class ManufacturedProblem:
    u: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    hz: Callable[[np.ndarray], np.ndarray]
    forcing: Forcing
    length: float
    fluid: FluidPair


def manufactured_problem(fp: FluidPair = MMS_FLUID, length: float = MMS_LENGTH) -> ManufacturedProblem:
    """Build the exact fields and their source terms with sympy."""
    z = sp.symbols("z", real=True)
    k = sp.pi / length
    u = 1 + sp.Rational(1, 2) * sp.sin(k * z)
    h = 1 + sp.Rational(3, 10) * sp.cos(k * z) + sp.Rational(1, 10) * z / length
    s = sp.diff(h, z)
    a1, a2 = viscosity_ratio_terms(fp)
    nu = fp.nu_d
    gr = fp.gamma / fp.rho_d
    K = 1 / (h * sp.sqrt(1 + s**2)) - sp.diff(s, z) / (1 + s**2) ** sp.Rational(3, 2)
    momentum = (
        u * sp.diff(u, z)
        - 6 * nu * a1 * s * sp.diff(u, z) / h
        - 3 * nu * a2 * sp.diff(u, z, 2)
        + gr * sp.diff(K, z)
        + body_acceleration(fp)
    )
    interface = u * sp.diff(h, z) + h * sp.diff(u, z) / 2

    fm = sp.lambdify(z, momentum, "numpy")
    fi = sp.lambdify(z, interface, "numpy")
    fu = sp.lambdify(z, u, "numpy")
    fh = sp.lambdify(z, h, "numpy")
    fs = sp.lambdify(z, s, "numpy")

    def vec(f):
        return lambda x: np.broadcast_to(np.asarray(f(np.asarray(x, dtype=float)), dtype=float), np.shape(x)).copy()

    forcing = Forcing(momentum=lambda x, t: vec(fm)(x), interface=lambda x, t: vec(fi)(x))
    return ManufacturedProblem(vec(fu), vec(fh), vec(fs), forcing, length, fp)


@dataclass
class MMSRow:
    n_elements: int
    L2_err_h: float
    rate_h: Optional[float]
    L2_err_u: float
    rate_u: Optional[float]
    eta_global: float
    effectivity: float
    empirical_c: float


def _l2_error(mesh: Mesh1D, values: np.ndarray, exact, order: int = 6) -> float:
    qx, qw = gauss_unit(order)
    z = mesh.z
    zq = (1.0 - qx)[None, :] * z[:-1, None] + qx[None, :] * z[1:, None]
    vq = (1.0 - qx)[None, :] * values[:-1, None] + qx[None, :] * values[1:, None]
    return float(np.sqrt(np.sum(mesh.element_sizes * ((vq - exact(zq)) ** 2 @ qw))))


def solve_level(problem: ManufacturedProblem, n_elements: int, *, tol: float = 1e-10, backend=None) -> tuple[State, Mesh1D]:
    """Steady forced solve with Dirichlet ``u, h`` at both ends."""
    mesh = build_uniform(n_elements, problem.length)
    z = mesh.z
    fp = problem.fluid
    # start from a perturbed interpolant so Newton has work to do
    bump = 0.05 * np.sin(np.pi * z / problem.length)
    h0 = problem.h(z) + bump
    guess = State(problem.u(z) - bump, h0, project_slope(mesh, h0), problem.length, 0.0)
    ends = (problem.u(z[[0, -1]]), problem.h(z[[0, -1]]))
    state, _ = newton_solve(
        guess, guess, math.inf, mesh, fp,
        tol=tol, max_iters=30, moving=False, tip_model="dirichlet",
        inlet=(float(ends[0][0]), float(ends[1][0])),
        tip_values=(float(ends[0][1]), float(ends[1][1])),
        forcing=problem.forcing, backend=backend,
    )
    return state, mesh


def convergence_study(levels: int, base: int = BASE_ELEMENTS, *, backend=None) -> list[MMSRow]:
    """Solve on ``levels`` meshes of ``base * 2**k`` elements."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    problem = manufactured_problem()
    rows: list[MMSRow] = []
    for k in range(levels):
        n = base * 2**k
        state, mesh = solve_level(problem, n, backend=backend)
        eh = _l2_error(mesh, state.h, problem.h)
        eu = _l2_error(mesh, state.u, problem.u)
        eta = estimate(state, mesh).eta_global
        e_broken, e_mixed = slope_errors(state, mesh, problem.hz)
        rate_h = rate_u = None
        if rows:
            rate_h = math.log2(rows[-1].L2_err_h / eh)
            rate_u = math.log2(rows[-1].L2_err_u / eu)
        rows.append(MMSRow(n, eh, rate_h, eu, rate_u, eta, eta / e_broken, e_mixed / e_broken))
    return rows


def format_table(rows: list[MMSRow]) -> str:
    head = "n_elements  L2_err_h    rate_h  L2_err_u    rate_u  eta_global  effectivity  empirical_c"
    lines = [head]
    for r in rows:
        rh = "     -" if r.rate_h is None else f"{r.rate_h:6.3f}"
        ru = "     -" if r.rate_u is None else f"{r.rate_u:6.3f}"
        lines.append(
            f"{r.n_elements:10d}  {r.L2_err_h:.3e}  {rh}  {r.L2_err_u:.3e}  {ru}  "
            f"{r.eta_global:.3e}  {r.effectivity:11.4f}  {r.empirical_c:11.4f}"
        )
    return "\n".join(lines)
