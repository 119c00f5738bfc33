import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riseg.bfif import (
    PairFeature, SamplerConfig, anchor_motion, compute_bfifs, group_bfifs, pair_features,
    pixels_to_world, sample_frames,
)
from riseg.errors import InsufficientFrames
from riseg.kde import fit_grouping_model
from riseg.oracles import FlowField, oracle_flow
from riseg.scene import RigidBody, render_labels
from riseg.se3 import Twist, twist_distance

from helpers import frame_bodies, grouping_scores, grouping_steps, rand_index, scene_of, square

EXACT = SamplerConfig.for_noise(0.0)


def _two_body_motion():
    a = RigidBody(1, square(0.03), 0.0, -0.08, 0.0)
    b = RigidBody(2, square(0.03), 0.0, 0.08, 0.0)
    s0 = scene_of(a, b)
    s1 = scene_of(a.moved(0.0, (0.01, 0.0), a.centroid()), b.moved(0.1, (0.0, 0.0), b.centroid()))
    return s0, s1


def test_zero_flow_keeps_frames():
    s0, _ = _two_body_motion()
    mask = render_labels(s0)
    ft, ft1 = sample_frames(mask, FlowField.zeros(mask.shape), EXACT, 0)
    assert len(ft) >= 3
    for a, b in zip(ft, ft1):
        assert a.pose.allclose(b.pose, atol=1e-12)


def test_too_few_pixels():
    mask = np.zeros((20, 20), dtype=int)
    mask[5, 5:7] = 1
    with pytest.raises(InsufficientFrames):
        sample_frames(mask, FlowField.zeros(mask.shape), EXACT, 0)


def test_sampler_validation():
    with pytest.raises(ValueError):
        SamplerConfig(n_samples=8)
    with pytest.raises(ValueError):
        SamplerConfig(d_c=0.0)


def test_rigid_translation_gives_constant_displacement():
    s0, s1 = _two_body_motion()
    mask = (render_labels(s0) == 1).astype(int)
    flow = oracle_flow(s0, s1, 0.0)
    ft, ft1 = sample_frames(mask, flow, EXACT, 3)
    ref = ft1[0].pose @ ft[0].pose.inverse()
    for a, b in zip(ft, ft1):
        assert (b.pose @ a.pose.inverse()).allclose(ref, atol=1e-9)


def test_frames_respect_triplet_cap():
    s0, _ = _two_body_motion()
    mask = render_labels(s0)
    ft, _ = sample_frames(mask, FlowField.zeros(mask.shape), EXACT, 1)
    for fr in ft:
        w = pixels_to_world(fr.anchor_pixels)
        d = np.linalg.norm(w[:, None] - w[None], axis=-1)
        assert d.max() <= EXACT.d_c
        # one frame never spans two mask labels
        r, c = fr.anchor_pixels.astype(int).T
        assert len(set(mask[r, c])) == 1


def test_sampling_is_seeded():
    s0, s1 = _two_body_motion()
    mask, flow = render_labels(s0), oracle_flow(s0, s1, 0.0)
    a, _ = sample_frames(mask, flow, EXACT, 5)
    b, _ = sample_frames(mask, flow, EXACT, 5)
    c, _ = sample_frames(mask, flow, EXACT, 6)
    assert [f.anchor_pixels.tobytes() for f in a] == [f.anchor_pixels.tobytes() for f in b]
    assert [f.anchor_pixels.tobytes() for f in a] != [f.anchor_pixels.tobytes() for f in c]


def test_identical_frames_give_zero_twists():
    s0, _ = _two_body_motion()
    mask = render_labels(s0)
    ft, _ = sample_frames(mask, FlowField.zeros(mask.shape), EXACT, 0)
    for tw in compute_bfifs(ft, ft):
        assert np.all(tw.vector() == 0)


def test_translation_twist():
    s0, s1 = _two_body_motion()
    mask = (render_labels(s0) == 1).astype(int)
    ft, ft1 = sample_frames(mask, oracle_flow(s0, s1, 0.0), EXACT, 0)
    for tw in compute_bfifs(ft, ft1):
        np.testing.assert_allclose(tw.vector(), [0, 0, 0, 0.01, 0, 0], atol=1e-12)


def test_two_bodies_separate_twists():
    s0, s1 = _two_body_motion()
    mask = render_labels(s0)
    ft, ft1 = sample_frames(mask, oracle_flow(s0, s1, 0.0), EXACT, 0)
    tw = compute_bfifs(ft, ft1)
    body = frame_bodies(ft, mask)
    assert set(body) == {1, 2}
    for i in range(len(tw)):
        for j in range(len(tw)):
            d = twist_distance(tw[i], tw[j])
            if body[i] == body[j]:
                assert d <= 1e-9
            else:
                assert d > 1e-3


def test_compute_rejects_misaligned():
    s0, _ = _two_body_motion()
    mask = render_labels(s0)
    ft, ft1 = sample_frames(mask, FlowField.zeros(mask.shape), EXACT, 0)
    with pytest.raises(ValueError):
        compute_bfifs(ft, ft1[:-1])


@settings(max_examples=50)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_pair_feature_symmetry(a, b):
    ta, tb = Twist(a[:3], a[3:]), Twist(b[:3], b[3:])
    ab, ba = PairFeature.between(ta, tb), PairFeature.between(tb, ta)
    assert ab.d_omega == ba.d_omega and ab.d_linear == ba.d_linear
    fab = pair_features([ta, tb])
    fba = pair_features([tb, ta])
    np.testing.assert_array_equal(fab, fba)
    np.testing.assert_array_equal(pair_features([ta, tb], "abs"), pair_features([tb, ta], "abs"))


def test_pair_features_layout():
    tws = [Twist([0, 0, k * 0.1], [k * 0.01, 0, 0]) for k in range(4)]
    f = pair_features(tws)
    assert f.shape == (6, 2)
    np.testing.assert_allclose(f[0], [0.1, 0.01])
    np.testing.assert_allclose(f[2], [0.3, 0.03])
    assert pair_features(tws, "abs").shape == (6, 6)


@pytest.fixture(scope="module")
def toy_model():
    rng = np.random.default_rng(0)
    same = np.abs(rng.normal(0, [1e-4, 1e-5], (200, 2)))
    diff = np.column_stack([rng.uniform(0, 0.2, 200), rng.uniform(0.002, 0.02, 200)])
    return fit_grouping_model(same, diff)


def _frames(s0, s1, seed=0):
    mask = render_labels(s0)
    ft, ft1 = sample_frames(mask, oracle_flow(s0, s1, 0.0), EXACT, seed)
    return ft, compute_bfifs(ft, ft1), frame_bodies(ft, mask)


def test_identical_twists_form_one_group(toy_model):
    s0, s1 = _two_body_motion()
    ft, _, _ = _frames(s0, s1)
    tws = [Twist([0, 0, 0.02], [0.01, 0.0, 0.0])] * len(ft)
    g = group_bfifs(tws, ft, toy_model)
    assert len(g.groups) == 1
    assert g.groups[0] == tuple(range(len(ft)))


def test_two_motions_form_two_groups(toy_model):
    ft, tws, body = _frames(*_two_body_motion())
    g = group_bfifs(tws, ft, toy_model)
    assert len(g.groups) == 2
    for grp in g.groups:
        assert len(set(body[list(grp)])) == 1
    assert rand_index([g.label_of()[m] for m in g.moving], body[list(g.moving)]) == 1.0


def test_stationary_frames_are_excluded(toy_model):
    a = RigidBody(1, square(0.03), 0.0, -0.08, 0.0)
    b = RigidBody(2, square(0.03), 0.0, 0.08, 0.0)
    s0 = scene_of(a, b)
    s1 = scene_of(a.moved(0.0, (0.01, 0.0), a.centroid()), b)
    ft, tws, body = _frames(s0, s1)
    g = group_bfifs(tws, ft, toy_model)
    assert set(g.stationary) == set(np.flatnonzero(body == 2))
    assert all(body[i] == 1 for grp in g.groups for i in grp)
    assert sorted(i for grp in g.groups for i in grp) == sorted(g.moving)


def test_all_stationary_gives_no_groups(toy_model):
    s0, _ = _two_body_motion()
    ft, tws, _ = _frames(s0, s0)
    g = group_bfifs(tws, ft, toy_model)
    assert g.groups == () and g.moving == ()
    assert g.stationary == tuple(range(len(ft)))


def test_grouping_permutation_invariance(toy_model):
    ft, tws, _ = _frames(*_two_body_motion())
    ref = group_bfifs(tws, ft, toy_model)
    rng = np.random.default_rng(1)
    for _ in range(5):
        perm = rng.permutation(len(ft))
        g = group_bfifs([tws[p] for p in perm], [ft[p] for p in perm], toy_model)
        back = {frozenset(int(perm[i]) for i in grp) for grp in g.groups}
        assert back == {frozenset(grp) for grp in ref.groups}


def test_grouping_partitions_moving_frames(toy_model):
    ft, tws, _ = _frames(*_two_body_motion(), seed=4)
    g = group_bfifs(tws, ft, toy_model)
    flat = [i for grp in g.groups for i in grp]
    assert len(flat) == len(set(flat))
    assert sorted(flat) == list(g.moving)
    assert set(g.moving).isdisjoint(g.stationary)
    assert [grp[0] for grp in g.groups] == sorted(grp[0] for grp in g.groups)


def test_tau_must_be_open_interval(toy_model):
    ft, tws, _ = _frames(*_two_body_motion())
    with pytest.raises(ValueError):
        group_bfifs(tws, ft, toy_model, tau=1.0)


def test_anchor_motion_matches_flow():
    ft, tws, body = _frames(*_two_body_motion())
    m = anchor_motion(tws, ft)
    np.testing.assert_allclose(m[body == 1], 5.0, atol=1e-9)


def test_noiseless_separability_on_simulator_steps(noiseless_model):
    scores = [grouping_scores(step, noiseless_model, EXACT) for step in grouping_steps(15, 4242, 0.0)]
    assert all(ri == 1.0 for ri, _, _ in scores)
