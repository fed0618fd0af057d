import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affproj.linalg import inner, norm
from affproj.oracle import direct_projection, stack
from affproj.sets import (CustomSet, Hyperplane, HyperplaneSet,
                          InfeasibleIntersectionError, InfeasibleSetError,
                          RowConstraintSet, project_hyperplane,
                          project_hyperplane_intersection,
                          project_row_constraint, residual)


def test_hyperplane_axis_aligned_projection():
    h = Hyperplane([1.0, 0.0], 1.0)
    np.testing.assert_allclose(project_hyperplane([2.0, 0.0], h), [1.0, 0.0])


def test_hyperplane_member_is_fixed():
    h = Hyperplane([1.0, 2.0], 5.0)
    x = np.array([1.0, 2.0])
    np.testing.assert_allclose(project_hyperplane(x, h), x)


def test_zero_normal_means_whole_space():
    h = Hyperplane([0.0, 0.0], 0.0)
    np.testing.assert_allclose(project_hyperplane([1.0, 1.0], h), [1.0, 1.0])
    assert h.is_whole_space()
    assert HyperplaneSet(h).residual([3.0, -4.0]) == 0.0


def test_zero_normal_with_offset_is_rejected():
    with pytest.raises(ValueError):
        Hyperplane([0.0, 0.0], 1.0)


def test_hyperplane_dimension_mismatch():
    with pytest.raises(ValueError):
        project_hyperplane([1.0, 2.0, 3.0], Hyperplane([1.0, 0.0], 0.0))


def test_row_constraint_coordinate_plane():
    p = project_row_constraint([3.0, 5.0], [[1.0, 0.0]], [0.0])
    np.testing.assert_allclose(p, [0.0, 5.0])


def test_row_constraint_member_is_fixed():
    C = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    x = np.array([2.0, 1.0, 3.0])
    p = project_row_constraint(x, C, C @ x)
    np.testing.assert_allclose(p, x, atol=1e-12)


def test_row_constraint_single_row_equals_hyperplane():
    p1 = project_row_constraint([0.0, 0.0], [[1.0, 1.0]], [2.0])
    p2 = project_hyperplane([0.0, 0.0], Hyperplane([1.0, 1.0], 2.0))
    np.testing.assert_allclose(p1, p2, atol=1e-12)
    np.testing.assert_allclose(p1, [1.0, 1.0], atol=1e-12)


def test_row_constraint_inconsistent_raises():
    with pytest.raises(InfeasibleSetError):
        project_row_constraint([0.0, 0.0], [[1.0, 0.0], [1.0, 0.0]], [0.0, 1.0])


def test_projection_idempotent_and_orthogonal_to_directions():
    rng = np.random.default_rng(3)
    C = rng.standard_normal((3, 8))
    d = rng.standard_normal(3)
    s = RowConstraintSet(C, d)
    x = rng.standard_normal(8)
    p = s.project(x)
    np.testing.assert_allclose(s.project(p), p, atol=1e-10)
    # x - p is orthogonal to differences of members
    for _ in range(5):
        m1 = s.project(rng.standard_normal(8))
        m2 = s.project(rng.standard_normal(8))
        assert abs(inner(x - p, m1 - m2)) < 1e-9 * max(1.0, norm(x - p) * norm(m1 - m2))


def test_intersection_singleton_matches_single_hyperplane():
    h = Hyperplane([1.0, 2.0], 3.0)
    x = np.array([5.0, -1.0])
    np.testing.assert_allclose(project_hyperplane_intersection(x, [h]),
                               project_hyperplane(x, h), atol=1e-12)


def test_intersection_orthogonal_normals_act_componentwise():
    hs = [Hyperplane([1.0, 0.0, 0.0], 0.0), Hyperplane([0.0, 1.0, 0.0], 0.0)]
    p = project_hyperplane_intersection([1.0, 1.0, 1.0], hs)
    np.testing.assert_allclose(p, [0.0, 0.0, 1.0], atol=1e-12)


def test_intersection_duplicate_family_equals_single():
    hs = [Hyperplane([1.0, 0.0], 1.0), Hyperplane([1.0, 0.0], 1.0)]
    p = project_hyperplane_intersection([3.0, 0.0], hs)
    np.testing.assert_allclose(p, [1.0, 0.0], atol=1e-12)


def test_intersection_skips_whole_space_members():
    hs = [Hyperplane([0.0, 0.0], 0.0), Hyperplane([1.0, 0.0], 1.0)]
    p = project_hyperplane_intersection([3.0, 7.0], hs)
    np.testing.assert_allclose(p, [1.0, 7.0], atol=1e-12)


def test_intersection_of_inconsistent_family_raises():
    hs = [Hyperplane([1.0, 0.0], 0.0), Hyperplane([2.0, 0.0], 1.0)]
    with pytest.raises(InfeasibleIntersectionError):
        project_hyperplane_intersection([0.0, 0.0], hs)


def test_intersection_membership_on_large_consistent_family():
    rng = np.random.default_rng(4)
    z = rng.standard_normal(50)
    hs = []
    for _ in range(30):
        a = rng.standard_normal(50)
        hs.append(Hyperplane(a, inner(a, z)))
    p = project_hyperplane_intersection(rng.standard_normal(50), hs)
    worst = max(abs(inner(h.normal, p) - h.offset) for h in hs)
    assert worst < 1e-9 * max(1.0, norm(p))


def test_residual_zero_for_member():
    s = RowConstraintSet([[1.0, 0.0]], [2.0])
    assert residual(s, [2.0, 9.0]) == pytest.approx(0.0, abs=1e-12)


def test_residual_distance_to_line():
    s = HyperplaneSet(Hyperplane([1.0, 0.0], 1.0))
    assert residual(s, [2.0, 0.0]) == pytest.approx(1.0)


def test_residual_matches_projection_distance():
    rng = np.random.default_rng(5)
    C = rng.standard_normal((2, 6))
    d = rng.standard_normal(2)
    s = RowConstraintSet(C, d)
    x = rng.standard_normal(6)
    assert residual(s, x) == pytest.approx(norm(x - s.project(x)))


def test_custom_set_wraps_projector():
    s = CustomSet(2, lambda x: np.array([x[0], 0.0]))
    np.testing.assert_allclose(s.project([3.0, 4.0]), [3.0, 0.0])
    assert s.residual([3.0, 4.0]) == pytest.approx(4.0)
    assert s.rows() is None


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_firm_nonexpansiveness_of_projectors(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 10))
    C = rng.standard_normal((int(rng.integers(1, dim)), dim))
    d = rng.standard_normal(C.shape[0])
    s = RowConstraintSet(C, d)
    x = rng.standard_normal(dim)
    y = rng.standard_normal(dim)
    assert norm(s.project(x) - s.project(y)) <= norm(x - y) + 1e-9


def test_pythagoras_for_linear_sets():
    rng = np.random.default_rng(6)
    for _ in range(50):
        dim = int(rng.integers(2, 12))
        C = rng.standard_normal((int(rng.integers(1, dim)), dim))
        s = RowConstraintSet(C, np.zeros(C.shape[0]))
        x = rng.standard_normal(dim)
        p = s.project(x)
        lhs = norm(x - p) ** 2 + norm(p) ** 2
        assert lhs == pytest.approx(norm(x) ** 2, rel=1e-9)


def test_chained_projection_equals_joint_projection_inside_subspace():
    # projecting onto a subspace and then onto hyperplanes whose normals
    # are directions of that subspace equals the joint projection
    rng = np.random.default_rng(7)
    for _ in range(25):
        dim = int(rng.integers(4, 14))
        cod = int(rng.integers(1, max(2, dim // 3)))
        C = rng.standard_normal((cod, dim))
        mhat = RowConstraintSet(C, np.zeros(cod))
        _, _, vt = np.linalg.svd(C)
        null_basis = vt[cod:]
        hyps = []
        row_sets = [mhat]
        for _ in range(int(rng.integers(1, 4))):
            a = null_basis.T @ rng.standard_normal(null_basis.shape[0])
            hyps.append(Hyperplane(a, 0.0))
            row_sets.append(RowConstraintSet(a.reshape(1, -1), [0.0]))
        x = rng.standard_normal(dim)
        chained = project_hyperplane_intersection(mhat.project(x), hyps)
        joint = direct_projection(x, stack(row_sets))
        assert norm(chained - joint) < 1e-9 * max(1.0, norm(x))
