import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dropletfem.amr import RefinementExhausted, mark, mark_doerfler, mark_max, refine_cycle
from dropletfem.estimator import ErrorField, estimate
from dropletfem.mesh import Mesh1D, build_uniform
from dropletfem.state import State

fields = arrays(np.float64, st.integers(1, 60), elements=st.floats(0.0, 1e3, allow_subnormal=False))


def is_minimal_doerfler(eta, marked, theta):
    """The marked set reaches the squared share and no smaller set can."""
    total = np.sum(eta**2)
    got = np.sum(eta[list(marked)] ** 2)
    best_smaller = np.sum(np.sort(eta**2)[::-1][: len(marked) - 1])
    return got >= theta**2 * total * (1 - 1e-12) and best_smaller < theta**2 * total


def test_max_threshold_example():
    assert mark_max(ErrorField.from_values([0.5, 0.04, 0.06]), 0.1).marked == {0, 2}


def test_doerfler_example():
    ms = mark_doerfler(ErrorField.from_values([3.0, 2.0, 1.0]), 0.9)
    assert len(ms) == 2 and ms.marked == {0, 1}


def test_doerfler_plain_sum_accounting():
    # 3 + 2 = 5 < 0.9 * 6, so all three are needed
    assert len(mark_doerfler([3.0, 2.0, 1.0], 0.9, accounting="sum")) == 3


def test_max_lambda_one_marks_only_maxima():
    assert mark_max([1.0, 0.3, 1.0], 1.0).marked == {0, 2}


def test_zero_field_marks_nothing():
    assert len(mark_max([0.0, 0.0], 0.1)) == 0
    assert len(mark_doerfler([0.0, 0.0], 0.9)) == 0


def test_doerfler_ties_prefer_lower_index():
    assert mark_doerfler([1.0, 1.0, 1.0, 1.0], 0.5).marked == {0}


@pytest.mark.parametrize("bad", [-0.1, 1.5])
def test_max_rejects_lambda(bad):
    with pytest.raises(ValueError):
        mark_max([1.0], bad)


@pytest.mark.parametrize("bad", [0.0, 1.5])
def test_doerfler_rejects_theta(bad):
    with pytest.raises(ValueError):
        mark_doerfler([1.0], bad)


def test_unknown_strategy():
    with pytest.raises(ValueError):
        mark([1.0], "random", 0.5)
    assert len(mark([1.0, 2.0], "none", 0.5)) == 0


@settings(max_examples=300)
@given(eta=fields, theta=st.floats(0.05, 1.0))
def test_doerfler_minimal(eta, theta):
    ms = mark_doerfler(eta, theta)
    if np.sum(eta**2) == 0:
        assert len(ms) == 0
    else:
        assert is_minimal_doerfler(eta, ms.marked, theta)


@given(eta=fields, lam=st.floats(0.0, 1.0), k=st.floats(1e-6, 1e6))
def test_marking_scale_invariant(eta, lam, k):
    assert mark_max(eta, lam).marked == mark_max(eta * k, lam).marked or np.max(eta) == 0


@given(eta=fields, lam=st.floats(0.0, 1.0))
def test_max_marks_everything_above_threshold(eta, lam):
    marked = mark_max(eta, lam).marked
    if eta.max() > 0:
        assert marked == set(np.flatnonzero(eta >= lam * eta.max()).tolist())


def test_refine_cycle_transfers_and_logs():
    m = build_uniform(10, 1.0)
    h = 1.0 + m.z**3
    st_ = State(np.zeros(11), h, np.zeros(11), 1.0, 0.3)
    old = State(np.ones(11), h, np.zeros(11), 0.9, 0.2)
    rr = refine_cycle(st_, m, "doerfler", 0.9, carry=[old])
    assert rr.mesh.n_elements == 10 + rr.log["n_refined"]
    assert rr.log["n_elements_before"] == 10
    assert rr.log["eta_global_before"] == pytest.approx(estimate(st_, m).eta_global)
    assert rr.carried[0].L == 0.9 and np.all(rr.carried[0].u == 1.0)
    # the largest mismatch sits where h is steepest
    assert 9 in rr.log["marked"]


def test_refine_cycle_respects_generation_cap():
    m = build_uniform(4, 1.0)
    m = Mesh1D(m.ref_coords, 1.0, np.array([0, 0, 0, 3]))
    st_ = State(np.zeros(5), np.array([1.0, 1.0, 1.0, 1.0, 5.0]), np.zeros(5), 1.0)
    with pytest.raises(RefinementExhausted):
        refine_cycle(st_, m, "max_threshold", 0.9, max_generation=3)
