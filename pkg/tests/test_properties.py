import math

import pytest
from scipy.integrate import quad

from dropletfem.config import PRESETS
from dropletfem.properties import (
    FluidPair,
    PropertyError,
    annular_pressure_gradient,
    body_acceleration,
    buoyancy_factor,
    shear_pressure_coefficient,
    viscosity_ratio_terms,
)


def test_nu_is_derived(glycerol):
    assert glycerol.nu_d == pytest.approx(glycerol.mu_d / glycerol.rho_d, rel=1e-12)


def test_buoyancy_factor(glycerol):
    # 1 - 1.2 / 1222
    assert buoyancy_factor(glycerol) == pytest.approx(0.99901800327, rel=1e-10)


def test_buoyancy_vanishes_for_equal_densities():
    fp = FluidPair(gamma=0.07, rho_d=1000.0, mu_d=1e-3, rho_c=1000.0, mu_c=1e-3)
    assert buoyancy_factor(fp) == 0.0


def test_viscosity_ratio_terms(glycerol):
    a1, a2 = viscosity_ratio_terms(glycerol)
    assert a1 == pytest.approx(1.000165137614679, rel=1e-14)
    assert a2 == pytest.approx(1.0001100917431192, rel=1e-14)


def test_shear_pressure_coefficient(glycerol):
    assert shear_pressure_coefficient(glycerol) == pytest.approx(1.0091258e-3, rel=1e-7)


def test_shear_coefficient_decreases_with_c(glycerol):
    values = [shear_pressure_coefficient(glycerol.with_updates(C_shear=c)) for c in (1.1, 1.5, 2.0, 5.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("c", [1.0, 0.5])
def test_c_at_most_one_rejected(c):
    with pytest.raises(PropertyError):
        FluidPair(gamma=0.066, rho_d=1222.0, mu_d=0.109, C_shear=c)


@pytest.mark.parametrize(
    "bad",
    [dict(gamma=0.0), dict(rho_d=-1.0), dict(mu_d=0.0), dict(h_in=0.0), dict(R_tube=2.0e-3)],
)
def test_invariants_rejected(bad):
    kw = dict(gamma=0.066, rho_d=1222.0, mu_d=0.109)
    kw.update(bad)
    with pytest.raises(PropertyError):
        FluidPair(**kw)


def test_body_acceleration_gravity_only(glycerol):
    assert body_acceleration(glycerol) == pytest.approx(-buoyancy_factor(glycerol) * 9.81)


def test_body_acceleration_with_pressure_gradient(glycerol):
    fp = glycerol.with_updates(dpdz_c=-3.0)
    expected = -3.0 / (2 * 1222.0 * math.log(1.5)) - buoyancy_factor(fp) * 9.81
    assert body_acceleration(fp) == pytest.approx(expected, rel=1e-12)
    fp2 = fp.with_updates(pressure_gradient_term=True)
    assert body_acceleration(fp2) - body_acceleration(fp) == pytest.approx(2 / 1222.0 * -3.0)


def test_annular_gradient_matches_integrated_profile():
    mu, a, b, G = 1.8e-5, 2.5e-3, 2.5e-2, -4.0
    # Poiseuille profile in an annulus with no slip at r = a and r = b
    def u(r):
        return -G / (4 * mu) * ((b**2 - r**2) - (b**2 - a**2) * math.log(b / r) / math.log(b / a))

    flow, _ = quad(lambda r: 2 * math.pi * r * u(r), a, b, epsabs=0, epsrel=1e-13)
    u_mean = flow / (math.pi * (b**2 - a**2))
    assert annular_pressure_gradient(mu, u_mean, a, b) == pytest.approx(G, rel=1e-10)


def test_annular_gradient_bad_radii():
    with pytest.raises(PropertyError):
        annular_pressure_gradient(1e-5, 1.0, 2.0, 1.0)


def test_preset_flow_ratios_from_scenario():
    p = PRESETS["glycerol85"]
    assert p["u_in"] / p["u_c"] == pytest.approx(5e-3)
    assert p["R_tube"] / p["h_in"] == pytest.approx(10.0)
    assert p["h_in"] == 2.5e-3
