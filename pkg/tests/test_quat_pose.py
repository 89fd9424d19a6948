"""Quaternion and pose algebra against the scipy rotation oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xrteleop import quat
from xrteleop.pose import Pose

from oracles import quat_angle_between, scipy_matrix, scipy_multiply, scipy_rotate


def unit_quats():
    return (
        st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4)
        .map(np.array)
        .filter(lambda q: np.linalg.norm(q) > 1e-3)
        .map(lambda q: q / np.linalg.norm(q))
    )


def vectors():
    return st.lists(st.floats(-10.0, 10.0), min_size=3, max_size=3).map(np.array)


class TestQuat:
    @given(unit_quats(), unit_quats())
    def test_multiply_matches_scipy(self, a, b):
        ours = quat.multiply(a, b)
        ref = scipy_multiply(a, b)
        # quaternions double-cover rotations; compare up to sign
        assert min(np.linalg.norm(ours - ref), np.linalg.norm(ours + ref)) < 1e-12

    @given(unit_quats(), vectors())
    def test_rotate_matches_scipy(self, q, v):
        np.testing.assert_allclose(quat.rotate(q, v), scipy_rotate(q, v), atol=1e-9)

    @given(unit_quats())
    def test_to_matrix_matches_scipy(self, q):
        np.testing.assert_allclose(quat.to_matrix(q), scipy_matrix(q), atol=1e-12)

    @given(unit_quats())
    def test_matrix_round_trip(self, q):
        back = quat.from_matrix(quat.to_matrix(q))
        # sign-insensitive componentwise comparison (well conditioned, unlike arccos)
        assert min(np.linalg.norm(back - q), np.linalg.norm(back + q)) < 1e-12

    @given(unit_quats())
    def test_rotvec_round_trip(self, q):
        back = quat.from_rotvec(quat.to_rotvec(q))
        assert min(np.linalg.norm(back - q), np.linalg.norm(back + q)) < 1e-12

    @given(unit_quats())
    def test_conjugate_inverts(self, q):
        r = quat.multiply(q, quat.conjugate(q))
        assert quat_angle_between(r / np.linalg.norm(r), quat.IDENTITY) < 1e-9

    def test_normalize_pure_w_is_exact(self):
        # q ⊗ q* is always pure-w; normalizing it must give the exact identity
        for w in (0.5, 1.0 + 1e-10, 3.7, -2.0):
            out = quat.normalize(np.array([0.0, 0.0, 0.0, w]))
            expected = 1.0 if w > 0 else -1.0
            assert out.tolist() == [0.0, 0.0, 0.0, expected]

    def test_normalize_zero_raises(self):
        with pytest.raises(ValueError):
            quat.normalize(np.zeros(4))

    def test_small_angle_rotvec(self):
        v = np.array([1e-14, -2e-14, 3e-15])
        back = quat.to_rotvec(quat.from_rotvec(v))
        np.testing.assert_allclose(back, v, atol=1e-20)

    def test_axis_angle_known_value(self):
        q = quat.from_axis_angle(np.array([0.0, 0.0, 1.0]), np.pi / 2)
        np.testing.assert_allclose(q, [0, 0, np.sqrt(0.5), np.sqrt(0.5)], atol=1e-15)

    def test_zero_axis_raises(self):
        with pytest.raises(ValueError):
            quat.from_axis_angle(np.zeros(3), 1.0)


class TestPose:
    def test_identity(self):
        p = Pose.identity()
        assert p.position.tolist() == [0, 0, 0]
        assert p.orientation.tolist() == [0, 0, 0, 1]

    @given(vectors(), unit_quats())
    def test_compose_with_inverse_is_identity(self, pos, q):
        p = Pose(pos, q)
        out = p.compose(p.inverse())
        assert out.approx_equal(Pose.identity(), 1e-9)

    @given(vectors(), unit_quats(), vectors(), unit_quats(), vectors(), unit_quats())
    @settings(max_examples=50)
    def test_compose_associative(self, p1, q1, p2, q2, p3, q3):
        a, b, c = Pose(p1, q1), Pose(p2, q2), Pose(p3, q3)
        left = a.compose(b).compose(c)
        right = a.compose(b.compose(c))
        assert left.approx_equal(right, 1e-6)

    @given(vectors(), unit_quats(), vectors())
    def test_transform_point_matches_matrix_path(self, pos, q, pt):
        p = Pose(pos, q)
        ref = scipy_matrix(q) @ pt + pos
        np.testing.assert_allclose(p.transform_point(pt), ref, atol=1e-9)

    def test_unit_norm_after_construction(self):
        p = Pose((0, 0, 0), (1.0, 2.0, 3.0, 4.0))
        assert abs(np.linalg.norm(p.orientation) - 1.0) < 1e-6

    def test_pose7_round_trip(self):
        p = Pose((1, 2, 3), quat.from_axis_angle(np.array([1.0, 1.0, 0.0]), 0.7))
        assert Pose.from_pose7(p.to_pose7()) == p

    def test_pose7_wrong_arity(self):
        with pytest.raises(ValueError):
            Pose.from_pose7([0, 0, 0, 0, 0, 1])

    def test_immutability(self):
        p = Pose()
        with pytest.raises(AttributeError):
            p.position = np.zeros(3)
        with pytest.raises(ValueError):
            p.position[0] = 1.0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Pose((np.nan, 0, 0))
        with pytest.raises(ValueError):
            Pose((0, 0, 0), (0, 0, 0, np.inf))

    def test_rejects_degenerate_quaternion(self):
        with pytest.raises(ValueError):
            Pose((0, 0, 0), (0, 0, 0, 1e-9))
