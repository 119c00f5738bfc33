import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from riseg.errors import EmptyInput
from riseg.oracles import oracle_static_seg
from riseg.planner import (
    PlannerConfig, cluster_boundary, elbow_k, find_action, kmeans_elbow, lloyd, threshold_pixels,
)
from riseg.scene import generate_scene

from helpers import blob, disk_map, planner_fixture

SIN10 = np.sin(np.radians(10.0))


def test_threshold_empty_map():
    assert len(threshold_pixels(np.zeros((8, 8)), 120, 150)) == 0


def test_threshold_band_edges():
    u = np.zeros((8, 8), dtype=np.uint8)
    u[3, 4] = 130
    np.testing.assert_array_equal(threshold_pixels(u, 120, 150), [[3, 4]])
    assert len(threshold_pixels(u, 150, 256)) == 0
    u[3, 4] = 150
    assert len(threshold_pixels(u, 120, 150)) == 0
    np.testing.assert_array_equal(threshold_pixels(u, 150, 256), [[3, 4]])


@given(arrays(np.uint8, (9, 11)), st.integers(0, 254), st.integers(1, 256))
def test_threshold_matches_brute_force(u, lo, span):
    hi = min(lo + span, 256)
    expected = [(r, c) for r in range(9) for c in range(11) if lo <= u[r, c] < hi]
    got = threshold_pixels(u, lo, hi)
    assert [tuple(p) for p in got] == expected


def test_threshold_rejects_bad_band():
    with pytest.raises(ValueError):
        threshold_pixels(np.zeros((2, 2)), 150, 120)


def test_kmeans_empty_input():
    with pytest.raises(EmptyInput):
        kmeans_elbow(np.empty((0, 2)))


def test_single_blob_is_one_cluster():
    rng = np.random.default_rng(1)
    assert kmeans_elbow(blob(rng, (60, 60), 80, 3.0), seed=0).k == 1


def test_single_disk_is_one_cluster():
    u = disk_map((128, 128), [(64, 64)], 15, 200)
    assert kmeans_elbow(threshold_pixels(u, 150, 256)).k == 1


def test_two_blobs_are_found_with_centroids():
    rng = np.random.default_rng(2)
    a, b = blob(rng, (50, 50), 50), blob(rng, (50, 90), 50)
    cs = kmeans_elbow(np.vstack([a, b]), seed=3)
    assert cs.k == 2
    got = sorted(map(tuple, cs.centers))
    want = sorted([tuple(a.mean(axis=0)), tuple(b.mean(axis=0))])
    for g, w in zip(got, want):
        assert np.linalg.norm(np.subtract(g, w)) <= 1.5


def test_three_blobs_are_found():
    rng = np.random.default_rng(4)
    pts = [blob(rng, c, 50) for c in [(40, 40), (40, 90), (100, 65)]]
    cs = kmeans_elbow(np.vstack(pts), seed=0)
    assert cs.k == 3
    for p in pts:
        d = np.linalg.norm(cs.centers - p.mean(axis=0), axis=1)
        assert d.min() <= 1.5


@pytest.mark.parametrize("k_true", [1, 2, 3])
def test_elbow_on_random_separated_blobs(k_true):
    errors = 0
    for trial in range(20):
        rng = np.random.default_rng(100 * k_true + trial)
        centers = []
        while len(centers) < k_true:
            c = rng.uniform(20, 230, 2)
            if all(np.linalg.norm(c - o) > 40 for o in centers):
                centers.append(c)
        pts = np.vstack([blob(rng, c, int(rng.integers(30, 80)), rng.uniform(1.0, 3.0)) for c in centers])
        errors += kmeans_elbow(pts, seed=trial).k != k_true
    assert errors == 0


def test_kmeans_is_deterministic():
    rng = np.random.default_rng(5)
    pts = np.vstack([blob(rng, (30, 30), 40), blob(rng, (30, 70), 40)])
    a, b = kmeans_elbow(pts, seed=9), kmeans_elbow(pts, seed=9)
    np.testing.assert_array_equal(a.centers, b.centers)
    np.testing.assert_array_equal(a.assignments, b.assignments)


def test_lloyd_inertia_matches_assignment():
    rng = np.random.default_rng(6)
    x = rng.uniform(0, 50, (200, 2))
    centers, labels, inertia = lloyd(x, 4, np.random.default_rng(0))
    d = np.linalg.norm(x[:, None] - centers[None], axis=-1) ** 2
    np.testing.assert_array_equal(labels, d.argmin(axis=1))
    assert inertia == pytest.approx(d.min(axis=1).sum())


def test_elbow_rule_cases():
    assert elbow_k([100.0]) == 1
    assert elbow_k([100.0, 10.0]) == 2
    assert elbow_k([100.0, 60.0]) == 1
    # 1/k decay of a single blob has no elbow
    assert elbow_k(100.0 / np.arange(1, 9)) == 1
    assert elbow_k([1000.0, 20.0, 15.0, 12.0, 10.0]) == 2


def _check_action(action, u, cfg, seed):
    certain = kmeans_elbow(threshold_pixels(u, cfg.l_u, 256), cfg.k_max, seed, "certain", cfg.min_elbow,
                           min_chord_slope=cfg.min_chord_slope)
    p = np.array(action.contact_point)
    assert action.distance == cfg.d_push == 0.02
    assert np.linalg.norm(action.direction) == pytest.approx(1.0, abs=1e-9)
    # the contact pixel is on the boundary of a certain cluster whose partner is within d_a
    hits = [i for i in range(certain.k) if any((cluster_boundary(certain, i) == p).all(axis=1))]
    assert hits
    i = hits[0]
    ci = certain.centers[i]
    np.testing.assert_allclose(action.direction, (ci - p) / np.linalg.norm(ci - p), atol=1e-12)
    ok = False
    for j in range(certain.k):
        if j == i:
            continue
        axis = certain.centers[j] - ci
        if np.linalg.norm(axis) * cfg.pixel_pitch > cfg.d_a:
            continue
        if abs(np.dot(action.direction, axis / np.linalg.norm(axis))) <= SIN10 + 1e-12:
            ok = True
    assert ok


def test_seam_between_close_blobs_gives_perpendicular_push():
    u = disk_map((256, 256), [(128, 113), (128, 143)], 12, 200)
    u = disk_map((256, 256), [(128, 128)], 3, 130, u)
    cfg = PlannerConfig()
    a = find_action(u, cfg, seed=0)
    assert a is not None
    _check_action(a, u, cfg, 0)
    # connecting segment runs along columns, so the push runs along rows
    assert abs(a.direction[1]) <= SIN10 + 1e-12


def test_single_blob_gives_null():
    u = disk_map((128, 128), [(64, 64)], 15, 200)
    assert find_action(u) is None


def test_blobs_beyond_d_a_give_null():
    # 75 px at 2 mm/px is 15 cm
    u = disk_map((256, 256), [(128, 90), (128, 165)], 12, 200)
    u = disk_map((256, 256), [(128, 128)], 4, 130, u)
    assert find_action(u) is None


def test_uncertain_far_from_segment_gives_null():
    u = disk_map((256, 256), [(128, 113), (128, 143)], 12, 200)
    u = disk_map((256, 256), [(20, 20)], 4, 130, u)
    assert find_action(u) is None


def test_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(l_u=120, l_l=150)
    with pytest.raises(ValueError):
        PlannerConfig(d_b=0.0)


def test_find_action_deterministic():
    u, _, _ = planner_fixture(np.random.default_rng(3))
    assert find_action(u, seed=4) == find_action(u, seed=4)


def test_emptied_uncertain_band_forces_null():
    u = disk_map((256, 256), [(128, 113), (128, 143)], 12, 200)
    u = disk_map((256, 256), [(128, 128)], 3, 130, u)
    assert find_action(u) is not None
    assert find_action(u, PlannerConfig(l_l=256)) is None


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 1))
def test_action_contract_on_random_fixtures(seed):
    u, _, _ = planner_fixture(np.random.default_rng(seed))
    cfg = PlannerConfig()
    a = find_action(u, cfg, seed)
    if a is not None:
        _check_action(a, u, cfg, seed)


@pytest.mark.parametrize("seed", range(6))
def test_action_contract_on_oracle_maps(seed):
    sc = generate_scene(seed, 5)
    _, u = oracle_static_seg(sc, seed)
    cfg = PlannerConfig()
    a = find_action(u, cfg, seed)
    if a is not None:
        _check_action(a, u, cfg, seed)
