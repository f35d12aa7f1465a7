import math

import numpy as np
import pytest

from dropletfem.assembly import (
    apply_boundary_conditions,
    assemble,
    droplet_volume,
    project_slope,
)
from dropletfem.mesh import build_uniform
from dropletfem.physics import SingularCurvatureError
from dropletfem.state import State


def cylinder(glycerol, n=10, L=None):
    L = 3 * glycerol.h_in if L is None else L
    m = build_uniform(n, L)
    st = State(np.full(n + 1, glycerol.u_in), np.full(n + 1, glycerol.h_in), np.zeros(n + 1), L)
    return m, st


def test_static_cylinder_interior_residual_vanishes(glycerol):
    fp = glycerol.with_updates(g=0.0)
    m, st = cylinder(fp)
    sys = assemble(st, st, 1e-3, m, fp)
    r = sys.residual.reshape(-1, 3)
    scale = fp.gamma / (fp.rho_d * fp.h_in**2) * m.element_sizes[0]
    assert np.max(np.abs(r[1:-1, 0])) < 1e-12 * scale
    assert np.max(np.abs(r[:, 1:])) < 1e-15


def test_slope_rows_vanish_for_linear_h(glycerol):
    m = build_uniform(8, 1e-2)
    h = 1e-3 + 0.05 * m.z
    st = State(np.zeros(9), h, np.full(9, 0.05), m.length)
    sys = assemble(st, st, 1e-3, m, glycerol)
    assert np.max(np.abs(sys.residual[2::3])) < 1e-17


def test_projection_reproduces_linear_slope():
    m = build_uniform(7, 2.0)
    np.testing.assert_allclose(project_slope(m, 3.0 * m.z + 1.0), 3.0, rtol=1e-13)


def test_dirichlet_rows(glycerol):
    m, st = cylinder(glycerol)
    st = st.replace(h=st.h * 1.1)
    sys = assemble(st, st, 1e-3, m, glycerol)
    apply_boundary_conditions(sys, st, glycerol, "epsilon", eps_tip=1e-6)
    J = sys.dense()
    for row in (0, 1, 3 * 10 + 1):
        e = np.zeros(sys.size)
        e[row] = 1.0
        np.testing.assert_array_equal(J[row], e)
    assert sys.residual[0] == 0.0
    assert sys.residual[1] == pytest.approx(0.1 * glycerol.h_in)
    assert sys.residual[31] == pytest.approx(1.1 * glycerol.h_in - 1e-6)


def test_dirichlet_solve_hits_targets(glycerol):
    m, st = cylinder(glycerol)
    sys = assemble(st, st, 1e-3, m, glycerol)
    apply_boundary_conditions(sys, st, glycerol, "dirichlet", inlet=(2.0, 3.0), tip_values=(4.0, 5.0))
    dx = sys.solve(-sys.residual)
    x = st.pack() + dx
    assert (x[0], x[1], x[-3], x[-2]) == pytest.approx((2.0, 3.0, 4.0, 5.0), rel=1e-12)


def test_bad_tip_model(glycerol):
    m, st = cylinder(glycerol)
    sys = assemble(st, st, 1e-3, m, glycerol)
    with pytest.raises(ValueError):
        apply_boundary_conditions(sys, st, glycerol, "free")


def test_nonpositive_radius_raises(glycerol):
    m, st = cylinder(glycerol)
    h = st.h.copy()
    h[4] = -1e-2
    with pytest.raises(SingularCurvatureError):
        assemble(st.replace(h=h), st, 1e-3, m, glycerol)


def test_mismatched_state(glycerol):
    m, st = cylinder(glycerol)
    with pytest.raises(ValueError):
        assemble(st, st, 1e-3, build_uniform(5, 1.0), glycerol)


def test_volume_of_cylinder_and_cone():
    m = build_uniform(9, 2.0)
    assert droplet_volume(m, np.full(10, 0.5)) == pytest.approx(math.pi * 0.25 * 2.0, rel=1e-14)
    # cone of base radius 1 and height 2
    assert droplet_volume(m, 1.0 - m.z / 2.0) == pytest.approx(math.pi * 2.0 / 3.0, rel=1e-14)
    # partial volume from inside an element
    assert droplet_volume(m, np.full(10, 1.0), 0.7) == pytest.approx(math.pi * 1.3, rel=1e-14)
