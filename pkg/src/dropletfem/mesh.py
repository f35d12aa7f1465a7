"""Moving 1D mesh on ``[0, L(t)]``.

Nodes live at fixed reference coordinates ``zeta in [0, 1]``; physical
positions are ``z = zeta * L``. Growth of the droplet stretches every node
affinely, refinement bisects elements in reference space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MIN_SPACING = 1e-12
MIN_ELEMENTS = 4


class MeshError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh1D:
    ref_coords: np.ndarray
    length: float
    generation: np.ndarray

    def __post_init__(self):
        zeta = _frozen(np.asarray(self.ref_coords, dtype=float))
        gen = _frozen(np.asarray(self.generation, dtype=np.int64))
        object.__setattr__(self, "ref_coords", zeta)
        object.__setattr__(self, "generation", gen)
        if zeta.ndim != 1 or zeta.size < MIN_ELEMENTS + 1:
            raise MeshError(f"need at least {MIN_ELEMENTS} elements")
        if zeta[0] != 0.0 or zeta[-1] != 1.0:
            raise MeshError("reference coordinates must span [0, 1] exactly")
        if np.min(np.diff(zeta)) < MIN_SPACING:
            raise MeshError("reference coordinates must increase by >= 1e-12")
        if gen.shape != (zeta.size - 1,):
            raise MeshError("one generation entry per element required")
        if not self.length > 0:
            raise MeshError(f"length must be positive, got {self.length}")

    @property
    def n_nodes(self) -> int:
        return self.ref_coords.size

    @property
    def n_elements(self) -> int:
        return self.ref_coords.size - 1

    @property
    def z(self) -> np.ndarray:
        return self.ref_coords * self.length

    @property
    def element_sizes(self) -> np.ndarray:
        return np.diff(self.ref_coords) * self.length

    def __eq__(self, other):
        if not isinstance(other, Mesh1D):
            return NotImplemented
        return (
            self.length == other.length
            and np.array_equal(self.ref_coords, other.ref_coords)
            and np.array_equal(self.generation, other.generation)
        )


def build_uniform(n_elements: int, L0: float) -> Mesh1D:
    if n_elements < MIN_ELEMENTS:
        raise MeshError(f"n_elements must be >= {MIN_ELEMENTS}, got {n_elements}")
    if not L0 > 0:
        raise MeshError(f"L0 must be positive, got {L0}")
    zeta = np.arange(n_elements + 1, dtype=float) / n_elements
    return Mesh1D(zeta, float(L0), np.zeros(n_elements, dtype=np.int64))


def bisect(
    mesh: Mesh1D, marked: Iterable[int], fields: Sequence[np.ndarray] = ()
) -> tuple[Mesh1D, list[np.ndarray]]:
    """Split every marked element at its reference midpoint.

    Nodal fields are carried over by linear interpolation, which is exact
    for P1 data: the old nodal values are reproduced and every new midpoint
    value is the mean of its parent's end values.
    """
    ne = mesh.n_elements
    flags = np.zeros(ne, dtype=bool)
    idx = np.fromiter((int(k) for k in marked), dtype=np.int64)
    if idx.size:
        if idx.min() < 0 or idx.max() >= ne:
            raise MeshError(f"marked element index out of range [0, {ne})")
        flags[idx] = True
    for f in fields:
        if np.shape(f) != (mesh.n_nodes,):
            raise MeshError("fields must carry one value per node")
    if not flags.any():
        return mesh, [np.array(f, dtype=float, copy=True) for f in fields]

    zeta = mesh.ref_coords
    mids = 0.5 * (zeta[:-1] + zeta[1:])[flags]
    if np.min(mids - zeta[:-1][flags]) < MIN_SPACING or np.min(zeta[1:][flags] - mids) < MIN_SPACING:
        raise MeshError("bisection would create an element below minimum spacing")

    # new node k goes after old node insert_at[k]
    n_new = mesh.n_nodes + int(flags.sum())
    shift = np.concatenate(([0], np.cumsum(flags)))
    old_pos = np.arange(mesh.n_nodes) + shift
    mid_pos = (np.arange(ne) + shift[:-1] + 1)[flags]

    new_zeta = np.empty(n_new)
    new_zeta[old_pos] = zeta
    new_zeta[mid_pos] = mids

    gen = mesh.generation
    child_gen = np.repeat(gen + flags, 1 + flags.astype(np.int64))

    out = []
    for f in fields:
        f = np.asarray(f, dtype=float)
        g = np.empty(n_new)
        g[old_pos] = f
        g[mid_pos] = 0.5 * (f[:-1] + f[1:])[flags]
        out.append(g)
    return Mesh1D(new_zeta, mesh.length, child_gen), out


def grow_domain(mesh: Mesh1D, new_L: float) -> Mesh1D:
    if not new_L > 0:
        raise MeshError(f"new length must be positive, got {new_L}")
    if new_L == mesh.length:
        return mesh
    return Mesh1D(mesh.ref_coords, float(new_L), mesh.generation)


def mesh_velocity(mesh: Mesh1D, dLdt: float) -> np.ndarray:
    """Nodal velocity ``zeta * dL/dt`` of the scaled map."""
    return mesh.ref_coords * dLdt


def interpolate(mesh: Mesh1D, values: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Evaluate a P1 nodal field at physical positions ``z``."""
    return np.interp(z, mesh.z, values)
