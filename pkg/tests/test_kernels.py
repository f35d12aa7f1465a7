import numpy as np
import pytest

from dropletfem import HAVE_NUMBA
from dropletfem._backend import resolve
from dropletfem.assembly import apply_boundary_conditions, assemble, model_parameters
from dropletfem.kernels import assemble_arrays, element_eta_squared, gauss_unit
from dropletfem.mesh import Mesh1D
from dropletfem.state import State

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def random_problem(glycerol, n=12, seed=3):
    rng = np.random.default_rng(seed)
    zeta = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0.02, 0.98, n - 1)]))
    L = 4 * glycerol.h_in
    h = glycerol.h_in * (0.6 + 0.4 * rng.random(n + 1))
    u = glycerol.u_in * (1 + rng.standard_normal(n + 1))
    s = rng.standard_normal(n + 1)
    mesh = Mesh1D(zeta, L, np.zeros(n, dtype=np.int64))
    new = State(u, h, s, L, 0.01)
    old = State(u * 0.9, h * 1.05, s, 0.98 * L, 0.0)
    return mesh, new, old


@pytest.mark.parametrize("order, degree", [(1, 1), (2, 3), (3, 5), (4, 7)])
def test_gauss_exact_on_unit_interval(order, degree):
    x, w = gauss_unit(order)
    assert w.sum() == pytest.approx(1.0, rel=1e-15)
    assert np.dot(w, x**degree) == pytest.approx(1.0 / (degree + 1), rel=1e-13)


def test_gauss_rejects_zero():
    with pytest.raises(ValueError):
        gauss_unit(0)


@needs_numba
def test_backends_agree(glycerol):
    mesh, new, old = random_problem(glycerol, n=40)
    prm = model_parameters(glycerol, 100.0, 0.02, new.L, True)
    qx, qw = gauss_unit(3)
    fz = np.zeros((mesh.n_elements, 3))
    args = (mesh.ref_coords, new.u, new.h, new.s, old.u, old.h, prm, qx, qw, fz, fz)
    r1, a1, b1 = assemble_arrays(*args, backend="numpy")
    r2, a2, b2 = assemble_arrays(*args, backend="numba")
    assert b1 == b2 == -1
    np.testing.assert_allclose(r2, r1, rtol=1e-12, atol=1e-12 * np.abs(r1).max())
    np.testing.assert_allclose(a2, a1, rtol=1e-12, atol=1e-12 * np.abs(a1).max())
    e1 = element_eta_squared(mesh.ref_coords, new.h, new.s, new.L, qx, qw, backend="numpy")
    e2 = element_eta_squared(mesh.ref_coords, new.h, new.s, new.L, qx, qw, backend="numba")
    np.testing.assert_allclose(e2, e1, rtol=1e-12)


@pytest.mark.parametrize("backend", ["numpy", pytest.param("numba", marks=needs_numba)])
def test_jacobian_matches_central_differences(glycerol, backend):
    mesh, new, old = random_problem(glycerol)
    sys = assemble(new, old, 1e-2, mesh, glycerol, backend=backend)
    apply_boundary_conditions(sys, new, glycerol)
    J = sys.dense()
    x0 = new.pack()
    scale = np.abs(x0) + 1e-3 * np.abs(x0).max()
    fd = np.empty_like(J)
    for j in range(x0.size):
        eps = 1e-6 * scale[j]
        cols = []
        for sign in (1, -1):
            x = x0.copy()
            x[j] += sign * eps
            st = State.unpack(x, new.L, new.t)
            s2 = assemble(st, old, 1e-2, mesh, glycerol, backend=backend)
            apply_boundary_conditions(s2, st, glycerol)
            cols.append(s2.residual)
        fd[:, j] = (cols[0] - cols[1]) / (2 * eps)
    # relative to the size of each row
    row = np.abs(J).max(axis=1, keepdims=True)
    assert np.max(np.abs(J - fd) / row) < 1e-6


def test_matvec_matches_dense(glycerol):
    mesh, new, old = random_problem(glycerol)
    sys = assemble(new, old, 1e-2, mesh, glycerol)
    x = np.random.default_rng(0).standard_normal(sys.size)
    np.testing.assert_allclose(sys.matvec(x), sys.dense() @ x, rtol=1e-12, atol=1e-12 * np.abs(sys.dense()).max())


def test_resolve_backend():
    assert resolve("numpy") == "numpy"
    with pytest.raises(ValueError):
        resolve("fortran")
