"""Implicit time stepping with front tracking and adaptive refinement.

Each step solves the coupled ``(u, h, s)`` system together with the tip
kinematics ``L = L_old + dt * u_tip`` by Newton's method. The length enters
every row through the scaled map, so its column is dense; it is handled by
a Sherman-Morrison correction on top of the banded LU.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Optional

import numpy as np

from .amr import STRATEGIES, RefinementExhausted, refine_cycle
from .assembly import Forcing, apply_boundary_conditions, assemble, droplet_volume, project_slope
from .estimator import ErrorField, estimate
from .mesh import Mesh1D, build_uniform, grow_domain
from .physics import SingularCurvatureError, detect_pinch
from .properties import FluidPair
from .state import State

log = logging.getLogger("dropletfem")


class NonConvergence(RuntimeError):
    """Newton did not reach the tolerance; the caller should cut ``dt``."""


class SingularMatrix(RuntimeError):
    """The linearised system could not be factorised."""


@dataclass(frozen=True)
class RunConfig:
    dt_init: float = 1e-3
    dt_min: float = 1e-9
    dt_max: float = 5e-3
    newton_tol: float = 1e-8
    newton_max_iters: int = 25
    t_max: float = 3.0
    amr_strategy: str = "doerfler"
    lam: Optional[float] = None
    doerfler_accounting: str = "sum_of_squares"
    refine_trigger_N: int = 2
    output_every: int = 50
    L0: Optional[float] = None
    n_elements_init: int = 100
    quad_order: int = 3
    max_generation: int = 12
    pinch_threshold: float = 1e-2
    exclusion_fraction: float = 0.05
    eps_tip: float = 1e-3
    safety_fraction: float = 0.2
    time_scheme: str = "be"

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if self.lam is not None and not 0 < self.lam <= 1:
            raise ValueError("lambda must lie in (0, 1]")
        if not 0 < self.newton_tol < 1:
            raise ValueError("newton_tol must lie in (0, 1)")
        if self.amr_strategy not in STRATEGIES:
            raise ValueError(f"amr_strategy must be one of {STRATEGIES}")
        if self.time_scheme not in ("be", "bdf2"):
            raise ValueError("time_scheme must be 'be' or 'bdf2'")
        if self.n_elements_init < 4:
            raise ValueError("n_elements_init must be >= 4")
        if self.newton_max_iters < 1:
            raise ValueError("newton_max_iters must be >= 1")

    @property
    def marking_param(self) -> float:
        if self.lam is not None:
            return self.lam
        return 0.1 if self.amr_strategy == "max_threshold" else 0.9

    def with_updates(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass
class NewtonInfo:
    iterations: int
    residual_history: list


@dataclass
class StepRecord:
    step: int
    t: float
    dt: float
    L: float
    n_elements: int
    newton_iters: int
    eta_global: float
    eta_max: float
    h_min: float
    volume: float
    volume_defect: float


@dataclass
class RunReport:
    status: str = "t_max"
    message: str = ""
    pinch_time: Optional[float] = None
    pinch_z: Optional[float] = None
    pinch_h: Optional[float] = None
    droplet_volume: Optional[float] = None
    n_steps: int = 0
    n_refinements: int = 0
    n_elements_refined: int = 0
    final_n_elements: int = 0
    eta_global_final: Optional[float] = None
    final_error: Optional[ErrorField] = None
    history: list = field(default_factory=list)
    refinements: list = field(default_factory=list)
    dt_events: list = field(default_factory=list)
    final_state: Optional[State] = None
    final_mesh: Optional[Mesh1D] = None

    @property
    def failed(self) -> bool:
        return self.status == "failed"


# Newton updates below this (scaled) size mean the residual sits at round-off
STAGNATION_STEP = 1e-9


def _row_scales(mesh: Mesh1D, L: float, fp: FluidPair) -> np.ndarray:
    """Per-row weights turning the weak residual into a dimensionless one."""
    dz = np.diff(mesh.ref_coords) * L
    support = np.zeros(mesh.n_nodes)
    support[:-1] += 0.5 * dz
    support[1:] += 0.5 * dz
    accel = abs(fp.g) + fp.gamma / (fp.rho_d * fp.h_in**2)
    vel = max(abs(fp.u_in), 1e-12)
    w = np.empty(3 * mesh.n_nodes)
    w[0::3] = 1.0 / (support * accel)
    w[1::3] = 1.0 / (support * vel)
    w[2::3] = 1.0 / support
    return w


def _dirichlet_scales(fp: FluidPair, w: np.ndarray, n: int, tip_model: str) -> None:
    vel = max(abs(fp.u_in), 1e-12)
    w[0] = 1.0 / vel
    w[1] = 1.0 / fp.h_in
    if tip_model in ("epsilon", "dirichlet"):
        w[3 * (n - 1) + 1] = 1.0 / fp.h_in
    if tip_model == "dirichlet":
        w[3 * (n - 1)] = 1.0 / vel


def advance_length(state: State, dt: float, L_old: Optional[float] = None) -> float:
    """Backward-Euler tip kinematics ``L_new = L_old + dt * u_tip``.

    ``L_old`` defaults to ``state.L``.
    """
    base = state.L if L_old is None else L_old
    L_new = base + dt * float(state.u[-1])
    if not L_new > 0:
        raise ValueError(f"droplet length would become non-positive ({L_new})")
    return L_new


def newton_solve(
    guess: State,
    state_old: State,
    dt: float,
    mesh: Mesh1D,
    fp: FluidPair,
    *,
    tol: float = 1e-8,
    max_iters: int = 25,
    quad_order: int = 3,
    moving: bool = True,
    tip_model: str = "epsilon",
    eps_tip: Optional[float] = None,
    tip_values: Optional[tuple] = None,
    inlet: Optional[tuple] = None,
    forcing: Optional[Forcing] = None,
    history: Optional[State] = None,
    backend: Optional[str] = None,
) -> tuple[State, NewtonInfo]:
    """Damped Newton iteration for one implicit step.

    With ``moving=True`` the length follows ``L = L_old + dt * u_tip`` at
    every iterate. ``history`` switches to BDF2 (constant step) with
    ``history`` the level before ``state_old``. Raises ``NonConvergence``
    or ``SingularMatrix``.
    """
    t_new = guess.t
    n = mesh.n_nodes
    if history is not None:
        # BDF2 as a backward-Euler step of size 2dt/3 from a combined level
        dt_eff = 2.0 * dt / 3.0
        base = State(
            (4.0 * state_old.u - history.u) / 3.0,
            (4.0 * state_old.h - history.h) / 3.0,
            state_old.s,
            (4.0 * state_old.L - history.L) / 3.0,
            state_old.t,
        )
    else:
        dt_eff, base = dt, state_old

    def length_of(x):
        if not moving:
            return guess.L
        L = base.L + dt_eff * x[3 * (n - 1)]
        if not L > 0:
            raise SingularCurvatureError("droplet length became non-positive")
        return L

    def system(x, L):
        st = State.unpack(x, L, t_new)
        if np.any(st.h[:-1] <= 0.0):
            raise SingularCurvatureError("non-positive radius at an interior node")
        sys = assemble(st, base, dt_eff, mesh, fp, quad_order, forcing=forcing, backend=backend)
        apply_boundary_conditions(sys, st, fp, tip_model, eps_tip=eps_tip, inlet=inlet, tip_values=tip_values)
        return sys

    x = guess.pack()
    L = length_of(x)
    try:
        sys = system(x, L)
    except SingularCurvatureError as exc:
        raise NonConvergence(str(exc)) from exc
    w = _row_scales(mesh, L, fp)
    _dirichlet_scales(fp, w, n, tip_model)
    xs = np.empty(3 * n)
    xs[0::3] = 1.0 / max(abs(fp.u_in), 1e-12)
    xs[1::3] = 1.0 / fp.h_in
    xs[2::3] = 1.0 / max(1.0, float(np.max(np.abs(guess.s))))

    def rnorm(r):
        v = np.max(np.abs(r * w))
        return v if np.isfinite(v) else np.inf

    r = rnorm(sys.residual)
    hist = [r]
    k_tip = 3 * (n - 1)
    for it in range(max_iters):
        if r <= tol:
            return State.unpack(x, L, t_new), NewtonInfo(it, hist)
        try:
            y = sys.solve(-sys.residual)
            if moving:
                dL = 1e-7 * L
                r_pert = system(x, L + dL).residual
                col = (r_pert - sys.residual) / dL * dt_eff
                z = sys.solve(col)
                y = y - z * (y[k_tip] / (1.0 + z[k_tip]))
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularMatrix(str(exc)) from exc
        if not np.all(np.isfinite(y)):
            raise SingularMatrix("non-finite Newton update")
        step = 1.0
        accepted = False
        for _ in range(9):
            x_try = x + step * y
            try:
                L_try = length_of(x_try)
                sys_try = system(x_try, L_try)
                r_try = rnorm(sys_try.residual)
            except SingularCurvatureError:
                r_try = np.inf
            if r_try < r or (step == 1.0 and r_try <= tol):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # residual stuck at round-off level counts as converged
            if np.max(np.abs(y * xs)) < STAGNATION_STEP:
                return State.unpack(x, L, t_new), NewtonInfo(it, hist)
            raise NonConvergence(f"no residual decrease after 8 halvings (|r|={r:.3e})")
        x, L, sys, r = x_try, L_try, sys_try, r_try
        hist.append(r)
    if r <= tol:
        return State.unpack(x, L, t_new), NewtonInfo(max_iters, hist)
    raise NonConvergence(f"|r|={r:.3e} after {max_iters} iterations")


def initial_state(mesh: Mesh1D, fp: FluidPair, eps_tip: float) -> State:
    """Hemispherical cap ``h = h_in sqrt(1 - zeta^2)`` with the tip pinned to ``eps_tip``."""
    zeta = mesh.ref_coords
    h = fp.h_in * np.sqrt(np.clip(1.0 - zeta**2, 0.0, None))
    h[-1] = eps_tip
    u = np.full(mesh.n_nodes, fp.u_in)
    s = project_slope(mesh, h)
    return State(u, h, s, mesh.length, 0.0)


def volume_defect(mesh_old: Mesh1D, old: State, mesh_new: Mesh1D, new: State, dt: float, fp: FluidPair) -> tuple[float, float]:
    """Relative mismatch between the volume change and the boundary fluxes.

    Normalised by the inflow rate ``pi h_in^2 u_in``. Returns ``(V_new, defect)``.
    """
    V_old = droplet_volume(mesh_old, old.h)
    V_new = droplet_volume(mesh_new, new.h)
    dLdt = (new.L - old.L) / dt
    inflow = math.pi * new.h[0] ** 2 * new.u[0]
    outflow = math.pi * new.h[-1] ** 2 * (new.u[-1] - dLdt)
    q_ref = math.pi * fp.h_in**2 * abs(fp.u_in)
    return V_new, abs((V_new - V_old) / dt - inflow + outflow) / q_ref


def _interior_hmin(state: State, mesh: Mesh1D, frac: float) -> float:
    zeta = mesh.ref_coords
    sel = (zeta >= frac) & (zeta <= 1.0 - frac)
    return float(np.min(state.h[sel])) if sel.any() else float(np.min(state.h[:-1]))


def run(
    config: RunConfig,
    fp: FluidPair,
    *,
    on_snapshot: Optional[Callable[[int, State, Mesh1D, ErrorField], None]] = None,
    backend: Optional[str] = None,
) -> RunReport:
    """Advance the droplet from the initial cap until pinch-off or ``t_max``.

    Refinement (estimate, mark, bisect, transfer, re-solve the same step)
    runs when ``L / h_in`` first exceeds each integer ``N >= refine_trigger_N``
    and, as a safety net, each time the neck radius halves below
    ``safety_fraction * h_in``.
    """
    cfg = config
    report = RunReport()
    eps_tip = cfg.eps_tip * fp.h_in
    L0 = fp.h_in if cfg.L0 is None else cfg.L0
    mesh = build_uniform(cfg.n_elements_init, L0)
    state = initial_state(mesh, fp, eps_tip)
    pinch_threshold = cfg.pinch_threshold * fp.h_in
    adaptive = cfg.amr_strategy != "none"
    param = cfg.marking_param

    err = estimate(state, mesh, cfg.quad_order, backend=backend)
    report.final_state, report.final_mesh, report.final_error = state, mesh, err
    report.final_n_elements = mesh.n_elements
    report.eta_global_final = err.eta_global
    if cfg.t_max <= 0:
        return report
    if on_snapshot is not None:
        on_snapshot(0, state, mesh, err)

    solver_kw = dict(
        tol=cfg.newton_tol, max_iters=cfg.newton_max_iters, quad_order=cfg.quad_order,
        tip_model="epsilon", eps_tip=eps_tip, backend=backend,
    )
    t = 0.0
    dt = cfg.dt_init
    step = 0
    easy_streak = 0
    last_N = math.floor(L0 / fp.h_in + 1e-12)
    safety_level = cfg.safety_fraction * fp.h_in
    prev: Optional[State] = None
    prev_dt = None

    def solve_step(old, dt_step, hist):
        L_guess = old.L + dt_step * old.u[-1]
        guess = State(old.u, old.h, old.s, L_guess, old.t + dt_step)
        m = grow_domain(mesh, L_guess)
        return newton_solve(guess, old, dt_step, m, fp, history=hist, **solver_kw)

    while t < cfg.t_max * (1 - 1e-12):
        dt_step = min(dt, cfg.t_max - t)
        use_bdf2 = cfg.time_scheme == "bdf2" and prev is not None and prev_dt == dt_step
        try:
            new, info = solve_step(state, dt_step, prev if use_bdf2 else None)
        except (NonConvergence, SingularMatrix) as exc:
            dt *= 0.5
            easy_streak = 0
            report.dt_events.append((step, t, dt, f"halved: {exc}"))
            log.info("step %d t=%.6g: %s; dt -> %.3g", step, t, exc, dt)
            if dt < cfg.dt_min:
                report.status = "failed"
                report.message = f"dt underflow below dt_min at t={t:.6g}: {exc}"
                log.error(report.message)
                break
            continue

        mesh_old = grow_domain(mesh, state.L)
        mesh_new = grow_domain(mesh, new.L)

        crossed = math.floor(new.L / fp.h_in + 1e-12)
        length_trigger = crossed > last_N and crossed >= cfg.refine_trigger_N
        hmin = _interior_hmin(new, mesh_new, cfg.exclusion_fraction)
        safety_trigger = hmin < safety_level
        if adaptive and (length_trigger or safety_trigger):
            cause = "length" if length_trigger else "neck"
            err_before = estimate(new, mesh_new, cfg.quad_order, backend=backend)
            try:
                rr = refine_cycle(
                    new, mesh_new, cfg.amr_strategy, param,
                    accounting=cfg.doerfler_accounting, max_generation=cfg.max_generation,
                    quad_order=cfg.quad_order, carry=[state],
                )
            except RefinementExhausted as exc:
                log.warning("step %d: refinement exhausted: %s", step, exc)
                rr = None
            if rr is not None and rr.log["n_refined"] > 0:
                old_ref = rr.carried[0]
                ref_mesh = grow_domain(rr.mesh, state.L)
                try:
                    mesh = ref_mesh
                    resolved, info = newton_solve(
                        State(rr.state.u, rr.state.h, rr.state.s, new.L, new.t),
                        old_ref, dt_step, grow_domain(rr.mesh, new.L), fp, **solver_kw,
                    )
                except (NonConvergence, SingularMatrix) as exc:
                    # keep the refined mesh, retry this step with a smaller dt
                    state = old_ref
                    prev = None
                    dt *= 0.5
                    easy_streak = 0
                    report.dt_events.append((step, t, dt, f"halved after refinement: {exc}"))
                    if dt < cfg.dt_min:
                        report.status = "failed"
                        report.message = f"dt underflow after refinement at t={t:.6g}: {exc}"
                        break
                    report.n_refinements += 1
                    report.n_elements_refined += rr.log["n_refined"]
                    rr.log.update(step=step + 1, t=new.t, cause=cause, eta_global_after=float("nan"))
                    report.refinements.append(rr.log)
                    if length_trigger:
                        last_N = crossed
                    if safety_trigger:
                        safety_level *= 0.5
                    continue
                err_after = estimate(resolved, grow_domain(rr.mesh, resolved.L), cfg.quad_order, backend=backend)
                rr.log.update(step=step + 1, t=new.t, cause=cause, eta_global_after=err_after.eta_global)
                report.refinements.append(rr.log)
                report.n_refinements += 1
                report.n_elements_refined += rr.log["n_refined"]
                log.info(
                    "refine step=%d strategy=%s marked=%d elements=%d eta %.3e -> %.3e (%s)",
                    step + 1, cfg.amr_strategy, rr.log["n_refined"], rr.log["n_elements_after"],
                    err_before.eta_global, err_after.eta_global, cause,
                )
                state, new = old_ref, resolved
                prev = None
                mesh_old = grow_domain(mesh, state.L)
                mesh_new = grow_domain(mesh, new.L)
            if length_trigger:
                last_N = crossed
            if safety_trigger:
                while hmin < safety_level:
                    safety_level *= 0.5
        elif length_trigger:
            last_N = crossed

        V_new, defect = volume_defect(mesh_old, state, mesh_new, new, dt_step, fp)
        step += 1
        t = new.t
        prev, prev_dt = state, dt_step
        state = new
        mesh = mesh_new
        err = estimate(state, mesh, cfg.quad_order, backend=backend)
        rec = StepRecord(
            step, t, dt_step, state.L, mesh.n_elements, info.iterations, err.eta_global,
            float(err.eta_per_element.max()), _interior_hmin(state, mesh, cfg.exclusion_fraction),
            V_new, defect,
        )
        report.history.append(rec)
        report.final_state, report.final_mesh, report.final_error = state, mesh, err
        log.debug("step %d t=%.6g dt=%.3g L/h_in=%.4f its=%d eta=%.3e", step, t, dt_step,
                  state.L / fp.h_in, info.iterations, err.eta_global)

        pinch = detect_pinch(state, mesh, cfg.exclusion_fraction, pinch_threshold)
        if on_snapshot is not None and (step % cfg.output_every == 0 or pinch is not None):
            on_snapshot(step, state, mesh, err)
        if pinch is not None:
            report.status = "pinch"
            report.pinch_time = t
            report.pinch_z, report.pinch_h = pinch
            report.droplet_volume = droplet_volume(mesh, state.h, pinch[0])
            log.info("pinch-off at t=%.6g z=%.4g", t, pinch[0])
            break

        if info.iterations <= 5:
            easy_streak += 1
        else:
            easy_streak = 0
        if easy_streak >= 3 and dt < cfg.dt_max:
            new_dt = min(dt * 1.2, cfg.dt_max)
            report.dt_events.append((step, t, new_dt, "grown after 3 easy steps"))
            dt = new_dt
            easy_streak = 0

    report.n_steps = step
    report.final_n_elements = report.final_mesh.n_elements
    report.eta_global_final = report.final_error.eta_global
    if report.status == "failed" and on_snapshot is not None and report.final_state is not None:
        on_snapshot(step, report.final_state, report.final_mesh, report.final_error)
    return report
