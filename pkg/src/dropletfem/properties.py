"""Fluid-pair parameters and the closure constants of the slender-jet model.

All quantities are SI. Nondimensionalisation by the nozzle radius happens
only when output is written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace


class PropertyError(ValueError):
    """Raised when a parameter set violates a physical invariant."""


@dataclass(frozen=True)
class FluidPair:
    """Material and flow parameters of the dispersed/continuous phases.

    ``nu_d`` is derived from ``mu_d / rho_d`` so the two can never disagree.
    ``pressure_gradient_term`` switches on the extra ``2/rho_d dp/dz``
    contribution that the strong momentum equation carries but the
    discretised weak form leaves out.
    """

    gamma: float
    rho_d: float
    mu_d: float
    rho_c: float = 0.0
    mu_c: float = 0.0
    u_in: float = 5e-3
    u_c: float = 0.0
    h_in: float = 2.5e-3
    R_tube: float = 2.5e-2
    C_shear: float = 1.5
    dpdz_c: float = 0.0
    g: float = 9.81
    pressure_gradient_term: bool = False

    def __post_init__(self):
        if not self.gamma > 0:
            raise PropertyError(f"gamma must be positive, got {self.gamma}")
        if not self.rho_d > 0:
            raise PropertyError(f"rho_d must be positive, got {self.rho_d}")
        if not self.mu_d > 0:
            raise PropertyError(f"mu_d must be positive, got {self.mu_d}")
        if self.rho_c < 0 or self.mu_c < 0:
            raise PropertyError("continuous-phase density/viscosity must be >= 0")
        if not self.h_in > 0:
            raise PropertyError(f"h_in must be positive, got {self.h_in}")
        if not self.R_tube > self.h_in:
            raise PropertyError(
                f"R_tube ({self.R_tube}) must exceed h_in ({self.h_in})"
            )
        if not self.C_shear > 1:
            raise PropertyError(
                f"C_shear must be > 1 (ln C > 0), got {self.C_shear}"
            )

    @property
    def nu_d(self) -> float:
        return self.mu_d / self.rho_d

    def with_updates(self, **changes) -> "FluidPair":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


def buoyancy_factor(fp: FluidPair) -> float:
    """Reduced-gravity factor ``1 - rho_c / rho_d``."""
    return 1.0 - fp.rho_c / fp.rho_d


def viscosity_ratio_terms(fp: FluidPair) -> tuple[float, float]:
    """Return ``(1 + mu_c/mu_d, 1 + 2/3 mu_c/mu_d)``.

    The first multiplies the ``h_z u_z / h`` stress term, the second the
    axial viscous flux.
    """
    ratio = fp.mu_c / fp.mu_d
    return 1.0 + ratio, 1.0 + (2.0 / 3.0) * ratio


def shear_pressure_coefficient(fp: FluidPair) -> float:
    """Coefficient ``1 / (2 rho_d ln C)`` multiplying ``dp^c/dz``.

    Diverges as ``C -> 1+``; FluidPair already rejects ``C <= 1`` but the
    check is repeated for callers that bypass the dataclass.
    """
    if not fp.C_shear > 1:
        raise PropertyError(f"C_shear must be > 1, got {fp.C_shear}")
    return 1.0 / (2.0 * fp.rho_d * math.log(fp.C_shear))


def body_acceleration(fp: FluidPair) -> float:
    """Constant part of the momentum residual (shear forcing minus gravity).

    Positive values decelerate the dispersed phase along +z (downstream).
    """
    body = shear_pressure_coefficient(fp) * fp.dpdz_c
    if fp.pressure_gradient_term:
        body += 2.0 / fp.rho_d * fp.dpdz_c
    return body - buoyancy_factor(fp) * fp.g


def annular_pressure_gradient(mu_c: float, u_mean: float, r_inner: float, r_outer: float) -> float:
    """Axial pressure gradient of laminar flow in an annulus.

    Fully developed Poiseuille flow between coaxial no-slip cylinders of
    radii ``r_inner < r_outer`` carrying mean velocity ``u_mean``. Useful as
    a rough estimate of ``dpdz_c`` for a co-flow whose inner boundary is the
    jet itself; the sign is negative for flow towards +z.
    """
    if not 0 < r_inner < r_outer:
        raise PropertyError("need 0 < r_inner < r_outer")
    a2, b2 = r_inner**2, r_outer**2
    denom = b2**2 - a2**2 - (b2 - a2) ** 2 / math.log(r_outer / r_inner)
    return -8.0 * mu_c * u_mean * (b2 - a2) / denom
