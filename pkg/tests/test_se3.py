import numpy as np
import pytest
from hypothesis import given, strategies as st

from riseg.errors import CollinearTriplet, DegenerateDt, RotationNearPi, TripletTooWide
from riseg.se3 import (
    Pose, Twist, exp_se3, frame_from_triplet, log_se3, pose_compose, spatial_twist, twist_distance,
)

from conftest import random_pose

seeds = st.integers(0, 2**32 - 1)


def rot_z(a):
    return Pose.planar(a)


def test_compose_identity():
    assert pose_compose(Pose.identity(), Pose.identity()).allclose(Pose.identity(), 0)


def test_compose_translations():
    out = Pose.from_translation(1, 0, 0) @ Pose.from_translation(0, 2, 0)
    assert np.allclose(out.translation, [1, 2, 0])


def test_compose_order_rotation_then_translation():
    out = pose_compose(rot_z(np.pi / 2), Pose.from_translation(1, 0, 0))
    assert np.allclose(out.translation, [0, 1, 0], atol=1e-12)


@given(seeds)
def test_compose_matches_matrix_product_and_stays_orthonormal(seed):
    rng = np.random.default_rng(seed)
    a, b = random_pose(rng), random_pose(rng)
    c = a @ b
    assert np.allclose(c.matrix(), a.matrix() @ b.matrix(), atol=1e-12)
    assert np.linalg.norm(c.rotation.T @ c.rotation - np.eye(3)) < 1e-9
    assert np.linalg.det(c.rotation) > 0


@given(seeds)
def test_inverse_closes(seed):
    p = random_pose(np.random.default_rng(seed))
    assert (p @ p.inverse()).allclose(Pose.identity(), 1e-12)


def test_pose_rejects_reflection():
    with pytest.raises(ValueError):
        Pose(np.diag([1.0, 1.0, -1.0]))


def test_triplet_axis_aligned():
    f = frame_from_triplet([0, 0, 0], [1, 0, 0], [0, 1, 0])
    assert np.allclose(f.rotation, np.eye(3))
    assert np.allclose(f.translation, 0)


def test_triplet_collinear():
    with pytest.raises(CollinearTriplet):
        frame_from_triplet([0, 0, 0], [1e-12, 0, 0], [2e-12, 0, 0])


def test_triplet_too_wide():
    with pytest.raises(TripletTooWide):
        frame_from_triplet([0, 0, 0], [0.05, 0, 0], [0, 0.01, 0], d_c=0.03)
    frame_from_triplet([0, 0, 0], [0.02, 0, 0], [0, 0.01, 0], d_c=0.03)


@given(seeds)
def test_triplet_equivariance(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-0.02, 0.02, (3, 3))
    g = random_pose(rng)
    try:
        f = frame_from_triplet(*pts)
    except CollinearTriplet:
        return
    moved = frame_from_triplet(*g.apply(pts))
    assert np.allclose(moved.matrix(), (g @ f).matrix(), atol=1e-9)


def test_twist_no_motion():
    f = random_pose(np.random.default_rng(0))
    assert np.allclose(spatial_twist(f, f).vector(), 0, atol=1e-12)


def test_twist_pure_translation():
    f = frame_from_triplet([0.1, 0.0, 0], [0.11, 0.0, 0], [0.1, 0.01, 0])
    g = Pose.from_translation(0.01, 0, 0) @ f
    tw = spatial_twist(f, g, 1.0)
    assert np.allclose(tw.vector(), [0, 0, 0, 0.01, 0, 0], atol=1e-12)


def test_twist_rotation_about_offset_axis():
    q = np.array([1.0, 2.0, 0.0])
    disp = Pose.from_translation(*q) @ rot_z(0.1) @ Pose.from_translation(*-q)
    f = random_pose(np.random.default_rng(3))
    tw = spatial_twist(f, disp @ f, 1.0)
    assert np.allclose(tw.angular, [0, 0, 0.1], atol=1e-12)
    assert np.allclose(tw.linear, -np.cross([0, 0, 0.1], q), atol=1e-12)
    assert np.allclose(tw.linear, [0.2, -0.1, 0], atol=1e-12)


def test_twist_errors():
    f = Pose.identity()
    with pytest.raises(DegenerateDt):
        spatial_twist(f, f, 0.0)
    with pytest.raises(RotationNearPi):
        spatial_twist(f, rot_z(np.pi), 1.0)
    with pytest.raises(ValueError):
        spatial_twist(f, f, 1.0, method="bogus")


def test_twist_scales_with_dt():
    f = Pose.identity()
    g = Pose.planar(0.05, 0.01, 0.0)
    a, b = spatial_twist(f, g, 1.0), spatial_twist(f, g, 2.0)
    assert np.allclose(a.vector(), 2 * b.vector())


@given(seeds)
def test_log_exp_round_trip(seed):
    p = random_pose(np.random.default_rng(seed))
    assert exp_se3(log_se3(p)).allclose(p, 1e-9)


def test_log_small_angle_branch():
    p = exp_se3(Twist([0, 0, 1e-8], [0.01, 0, 0]))
    tw = log_se3(p)
    assert np.allclose(tw.vector(), [0, 0, 1e-8, 0.01, 0, 0], atol=1e-14)


@given(seeds)
def test_same_body_frames_share_twist(seed):
    rng = np.random.default_rng(seed)
    d = random_pose(rng)
    a, b = random_pose(rng), random_pose(rng)
    ta = spatial_twist(a, d @ a)
    tb = spatial_twist(b, d @ b)
    assert np.allclose(ta.vector(), tb.vector(), atol=1e-9, rtol=0)


@given(seeds)
def test_distinct_displacements_give_distinct_twists(seed):
    rng = np.random.default_rng(seed)
    d1, d2 = random_pose(rng, max_angle=2.5), random_pose(rng, max_angle=2.5)
    delta = twist_distance(log_se3(d1), log_se3(d2))
    a = random_pose(rng)
    assert twist_distance(spatial_twist(a, d1 @ a), spatial_twist(a, d2 @ a)) > delta / 2


@given(seeds, st.floats(0.0, 0.05))
def test_finite_difference_matches_log_for_small_rotations(seed, angle):
    rng = np.random.default_rng(seed)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    d = exp_se3(Twist(axis * angle, rng.uniform(-0.05, 0.05, 3)))
    f = random_pose(rng, scale=0.25)
    a = spatial_twist(f, d @ f, method="log")
    b = spatial_twist(f, d @ f, method="fd")
    assert np.max(np.abs(a.vector() - b.vector())) < 1e-4
