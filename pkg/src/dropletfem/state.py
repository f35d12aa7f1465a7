"""Nodal solution container shared by assembly, estimator and the time loop."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True, eq=False)
class State:
    """Nodal ``(u, h, s)`` at time ``t`` on a domain of length ``L``.

    ``u`` is the axial velocity, ``h`` the interface radius and ``s`` the
    mixed slope variable approximating ``dh/dz``.
    """

    u: np.ndarray
    h: np.ndarray
    s: np.ndarray
    L: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("u", "h", "s"):
            a = np.array(getattr(self, name), dtype=float, copy=True)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not (self.u.shape == self.h.shape == self.s.shape) or self.u.ndim != 1:
            raise ValueError("u, h and s must be 1-D arrays of equal length")

    @property
    def n_nodes(self) -> int:
        return self.u.size

    def pack(self) -> np.ndarray:
        """Interleave into the ``[u0, h0, s0, u1, ...]`` unknown vector."""
        x = np.empty(3 * self.n_nodes)
        x[0::3], x[1::3], x[2::3] = self.u, self.h, self.s
        return x

    @classmethod
    def unpack(cls, x: np.ndarray, L: float, t: float) -> "State":
        return cls(x[0::3], x[1::3], x[2::3], L, t)

    def replace(self, **changes) -> "State":
        return replace(self, **changes)
