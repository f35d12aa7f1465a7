import numpy as np
import pytest

from dropletfem.assembly import apply_boundary_conditions, assemble
from dropletfem.mesh import build_uniform
from dropletfem.mms import convergence_study, manufactured_problem
from dropletfem.state import State


@pytest.fixture(scope="module")
def problem():
    return manufactured_problem()


def test_exact_fields_consistent(problem):
    z = np.linspace(0, 1, 11)
    dz = 1e-6
    np.testing.assert_allclose(problem.hz(z), (problem.h(z + dz) - problem.h(z - dz)) / (2 * dz), rtol=1e-8)


def test_residual_of_interpolant_shrinks(problem):
    # the forced weak residual of the exact interpolant is a pure discretisation error
    norms = []
    for n in (16, 32, 64):
        m = build_uniform(n, 1.0)
        st = State(problem.u(m.z), problem.h(m.z), problem.hz(m.z), 1.0)
        sys = assemble(st, st, np.inf, m, problem.fluid, forcing=problem.forcing)
        ends = (problem.u(m.z[[0, -1]]), problem.h(m.z[[0, -1]]))
        apply_boundary_conditions(sys, st, problem.fluid, "dirichlet", inlet=(ends[0][0], ends[1][0]),
                                  tip_values=(ends[0][1], ends[1][1]))
        norms.append(np.max(np.abs(sys.residual)) * n)
    assert norms[2] < norms[1] < norms[0]


def test_study_rows(problem):
    rows = convergence_study(2, 8)
    assert [r.n_elements for r in rows] == [8, 16]
    assert rows[0].rate_h is None and rows[1].rate_h > 1.5
    assert all(r.L2_err_h > 0 and r.eta_global > 0 for r in rows)
