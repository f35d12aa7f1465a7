"""Marking strategies and the estimate -> mark -> bisect -> transfer cycle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .estimator import ErrorField, estimate
from .mesh import Mesh1D, MeshError, bisect
from .state import State

STRATEGIES = ("none", "max_threshold", "doerfler")
ACCOUNTING = ("sum_of_squares", "sum")


class RefinementExhausted(RuntimeError):
    """Every marked element is already at the depth or spacing limit."""


@dataclass(frozen=True)
class MarkSet:
    marked: frozenset
    strategy: str
    lam: float
    eta_snapshot: Optional[ErrorField] = field(default=None, compare=False, repr=False)

    def __len__(self):
        return len(self.marked)

    def sorted(self) -> list[int]:
        return sorted(self.marked)


def _eta(err) -> np.ndarray:
    return np.asarray(err.eta_per_element if isinstance(err, ErrorField) else err, dtype=float)


def mark_max(err, lam: float) -> MarkSet:
    """Mark every element with ``eta_K >= lam * max eta``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    eta = _eta(err)
    if eta.size == 0:
        return MarkSet(frozenset(), "max_threshold", lam, err if isinstance(err, ErrorField) else None)
    threshold = lam * eta.max()
    marked = np.flatnonzero(eta >= threshold)
    if eta.max() == 0.0:
        # an exact field needs no refinement
        marked = marked[:0]
    return MarkSet(frozenset(int(k) for k in marked), "max_threshold", lam,
                   err if isinstance(err, ErrorField) else None)


def doerfler_order(eta: np.ndarray) -> np.ndarray:
    """Element indices by decreasing indicator, ties to the lower index."""
    return np.lexsort((np.arange(eta.size), -eta))


def mark_doerfler(err, theta: float, accounting: str = "sum_of_squares") -> MarkSet:
    """Smallest set of largest indicators carrying a ``theta`` share of the total.

    With ``sum_of_squares`` accounting the marked ``eta_K^2`` must reach
    ``theta^2 * sum eta_K^2``; with ``sum`` the plain indicators must reach
    ``theta * sum eta_K``.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    if accounting not in ACCOUNTING:
        raise ValueError(f"accounting must be one of {ACCOUNTING}")
    eta = _eta(err)
    snap = err if isinstance(err, ErrorField) else None
    order = doerfler_order(eta)
    if accounting == "sum_of_squares":
        weights, target_share = eta[order] ** 2, theta * theta
    else:
        weights, target_share = eta[order], theta
    cum = np.cumsum(weights)
    if eta.size == 0 or cum[-1] <= 0.0:
        return MarkSet(frozenset(), "doerfler", theta, snap)
    target = target_share * cum[-1]
    k = int(np.searchsorted(cum, target, side="left"))
    k = min(k, eta.size - 1)
    return MarkSet(frozenset(int(i) for i in order[: k + 1]), "doerfler", theta, snap)


def mark(err, strategy: str, param: float, accounting: str = "sum_of_squares") -> MarkSet:
    if strategy == "max_threshold":
        return mark_max(err, param)
    if strategy == "doerfler":
        return mark_doerfler(err, param, accounting)
    if strategy == "none":
        return MarkSet(frozenset(), "none", param, err if isinstance(err, ErrorField) else None)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


class RefineResult(NamedTuple):
    state: State
    mesh: Mesh1D
    log: dict
    carried: list


def refine_cycle(
    state: State,
    mesh: Mesh1D,
    strategy: str,
    param: float,
    *,
    accounting: str = "sum_of_squares",
    max_generation: int = 12,
    quad_order: int = 3,
    carry: Sequence[State] = (),
) -> RefineResult:
    """Estimate, mark, bisect and transfer ``(u, h, s)``; no re-solve.

    ``carry`` lists further states on the same mesh (e.g. the previous time
    level) that must follow the refinement.
    """
    err = estimate(state, mesh, quad_order)
    marks = mark(err, strategy, param, accounting)
    gen = mesh.generation
    allowed = sorted(k for k in marks.marked if gen[k] < max_generation)
    log = {
        "strategy": strategy,
        "param": param,
        "n_marked": len(marks),
        "n_refined": len(allowed),
        "n_elements_before": mesh.n_elements,
        "eta_global_before": err.eta_global,
        "marked": allowed,
    }
    if marks.marked and not allowed:
        raise RefinementExhausted(f"all {len(marks)} marked elements are at generation {max_generation}")
    if not allowed:
        log["n_elements_after"] = mesh.n_elements
        return RefineResult(state, mesh, log, list(carry))
    fields = [state.u, state.h, state.s]
    for c in carry:
        fields += [c.u, c.h, c.s]
    try:
        new_mesh, out = bisect(mesh, allowed, fields)
    except MeshError as exc:
        raise RefinementExhausted(str(exc)) from exc
    new_state = State(out[0], out[1], out[2], state.L, state.t)
    carried = [State(out[3 + 3 * i], out[4 + 3 * i], out[5 + 3 * i], c.L, c.t) for i, c in enumerate(carry)]
    log["n_elements_after"] = new_mesh.n_elements
    return RefineResult(new_state, new_mesh, log, carried)
