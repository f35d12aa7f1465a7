import numpy as np
import pytest

from dropletfem.mesh import MeshError, bisect, build_uniform, grow_domain, interpolate, mesh_velocity
from dropletfem.state import State


def test_uniform_mesh():
    m = build_uniform(4, 2.0)
    assert m.n_nodes == 5 and m.n_elements == 4
    np.testing.assert_allclose(m.z, [0.0, 0.5, 1.0, 1.5, 2.0])
    np.testing.assert_allclose(m.element_sizes, 0.5)
    assert np.all(m.generation == 0)


@pytest.mark.parametrize("n, L", [(3, 1.0), (10, 0.0), (10, -1.0)])
def test_uniform_mesh_rejects(n, L):
    with pytest.raises(MeshError):
        build_uniform(n, L)


def test_bisect_transfers_linear_data_exactly():
    m = build_uniform(8, 3.0)
    f = 2.0 * m.z - 1.0
    g = np.sin(m.z)
    new, (f2, g2) = bisect(m, [0, 3, 7], [f, g])
    assert new.n_elements == 11
    np.testing.assert_allclose(f2, 2.0 * new.z - 1.0, rtol=0, atol=1e-14)
    # old nodes keep their values, new nodes take the parent midpoint mean
    old = np.isin(new.ref_coords, m.ref_coords)
    np.testing.assert_array_equal(g2[old], g)
    np.testing.assert_allclose(g2[~old], 0.5 * (g[[0, 3, 7]] + g[[1, 4, 8]]))


def test_bisect_generation_counts():
    m = build_uniform(4, 1.0)
    m1, _ = bisect(m, [1])
    assert list(m1.generation) == [0, 1, 1, 0, 0]
    m2, _ = bisect(m1, [2])
    assert list(m2.generation) == [0, 1, 2, 2, 0, 0]


def test_bisect_nothing_marked_is_identity():
    m = build_uniform(5, 1.0)
    new, (f,) = bisect(m, [], [m.z])
    assert new == m
    np.testing.assert_array_equal(f, m.z)


def test_bisect_bad_index():
    with pytest.raises(MeshError):
        bisect(build_uniform(4, 1.0), [4])


def test_grow_domain_keeps_reference_coordinates():
    m = build_uniform(6, 1.0)
    g = grow_domain(m, 2.5)
    np.testing.assert_array_equal(g.ref_coords, m.ref_coords)
    np.testing.assert_allclose(g.z, 2.5 * m.ref_coords)
    assert grow_domain(m, 1.0) is m
    with pytest.raises(MeshError):
        grow_domain(m, 0.0)


def test_mesh_velocity_is_linear_in_zeta():
    m = build_uniform(4, 1.0)
    np.testing.assert_allclose(mesh_velocity(m, 3.0), 3.0 * m.ref_coords)


def test_interpolate():
    m = build_uniform(4, 2.0)
    assert interpolate(m, m.z**2, np.array([0.25]))[0] == pytest.approx(0.125)


def test_state_pack_roundtrip():
    rng = np.random.default_rng(1)
    u, h, s = rng.random((3, 7))
    st = State(u, h, s, 2.0, 0.5)
    x = st.pack()
    np.testing.assert_array_equal(x[1::3], h)
    back = State.unpack(x, 2.0, 0.5)
    for a, b in zip((back.u, back.h, back.s), (u, h, s)):
        np.testing.assert_array_equal(a, b)


def test_state_is_immutable_and_checked():
    st = State(np.ones(3), np.ones(3), np.zeros(3), 1.0)
    with pytest.raises(ValueError):
        st.h[0] = 2.0
    with pytest.raises(ValueError):
        State(np.ones(3), np.ones(4), np.zeros(3), 1.0)
