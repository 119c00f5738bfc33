"""Hand-built scenes shared by the tests."""

import numpy as np

from riseg.scene import RigidBody, SceneState


def square(half):
    return np.array([[-half, -half], [half, -half], [half, half], [-half, half]], dtype=float)


def rect(hx, hy):
    return np.array([[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]], dtype=float)


def scene_of(*bodies):
    return SceneState(tuple(bodies))


def two_touching(gap=0.0, hx=0.02, hy=0.03):
    """Two rectangles side by side along x with ``gap`` metres between them."""
    a = RigidBody(1, rect(hx, hy), 0.0, -hx - gap / 2, 0.0)
    b = RigidBody(2, rect(hx, hy), 0.0, hx + gap / 2, 0.0)
    return scene_of(a, b)


def two_apart():
    a = RigidBody(1, square(0.02), 0.0, -0.08, 0.0)
    b = RigidBody(2, square(0.02), 0.0, 0.08, 0.0)
    return scene_of(a, b)


def disk_map(shape, centers, radius, value, u=None):
    """Paint filled disks of ``value`` into an uncertainty map."""
    u = np.zeros(shape, dtype=np.int32) if u is None else u
    rr, cc = np.mgrid[: shape[0], : shape[1]]
    for r, c in centers:
        u[(rr - r) ** 2 + (cc - c) ** 2 <= radius**2] = value
    return u


def blob(rng, center, n, spread=1.5):
    """``n`` distinct integer pixels scattered around ``center``."""
    pts = set()
    while len(pts) < n:
        p = np.rint(rng.normal(center, spread)).astype(int)
        pts.add((int(p[0]), int(p[1])))
    return np.array(sorted(pts))


def planner_fixture(rng, shape=(256, 256)):
    """Two certain disks with an uncertain seam disk between them.

    Returns the map and the two certain centres. Separation and radii vary;
    about a third of the fixtures put the disks beyond the 10 cm gate.
    """
    sep = rng.uniform(20, 75)
    ang = rng.uniform(0, np.pi)
    mid = rng.uniform(80, 176, 2)
    off = 0.5 * sep * np.array([np.sin(ang), np.cos(ang)])
    a, b = mid - off, mid + off
    rad = rng.uniform(5, 0.45 * sep)
    u = disk_map(shape, [a, b], rad, 200)
    u = disk_map(shape, [mid], rng.uniform(2, max(2.5, 0.5 * sep - rad)), 130, u)
    noise = rng.integers(-10, 11, size=shape)
    u = np.where(u > 0, np.clip(u + noise, 0, 255), 0)
    return u.astype(np.uint8), a, b


def frame_bodies(frames, gt):
    """Ground-truth body under all three anchors of each frame, or -1 when they disagree."""
    out = np.empty(len(frames), dtype=int)
    for n, fr in enumerate(frames):
        r, c = np.rint(fr.anchor_pixels).astype(int).T
        ids = gt[r, c]
        out[n] = ids[0] if np.all(ids == ids[0]) and ids[0] > 0 else -1
    return out


def body_twists(scene_t, scene_t1):
    """Spatial twist of every body that moved between the two scenes."""
    from riseg.se3 import log_se3

    return {
        b.id: log_se3(scene_t1.body(b.id).pose @ b.pose.inverse())
        for b in scene_t.bodies
        if not scene_t1.body(b.id).same_as(b)
    }


def motions_distinct(scene_t, scene_t1, gap=1e-3):
    tw = list(body_twists(scene_t, scene_t1).values())
    return all(
        np.linalg.norm(tw[i].vector() - tw[j].vector()) >= gap for i in range(len(tw)) for j in range(i + 1, len(tw))
    )


def grouping_steps(count, seed, noise_sigma, distinct=True):
    """``count`` pushed steps ``(scene_t, scene_t1, mask_t, flow, step_seed)`` from held-out episodes."""
    from riseg.config import RunConfig
    from riseg.oracles import oracle_flow, oracle_static_seg
    from riseg.training import simulate_pushes

    cfg = RunConfig.from_dict(noise_sigma=noise_sigma)
    out = []
    batch = 0
    while len(out) < count:
        for s0, s1, oseed in simulate_pushes(12, seed + 7919 * batch, cfg):
            if distinct and not motions_distinct(s0, s1):
                continue
            n = len(out)
            mask, _ = oracle_static_seg(s0, oseed)
            flow = oracle_flow(s0, s1, noise_sigma, seed=seed * 1_000_003 + n)
            out.append((s0, s1, mask, flow, seed + n))
            if len(out) == count:
                break
        batch += 1
    return out


def rand_index(pred, truth):
    """Pair-counting Rand index of two labelings of the same items (1.0 for fewer than two items)."""
    pred, truth = np.asarray(pred), np.asarray(truth)
    if len(pred) < 2:
        return 1.0
    i, j = np.triu_indices(len(pred), k=1)
    return float(np.mean((pred[i] == pred[j]) == (truth[i] == truth[j])))


def grouping_scores(step, model, sampler, method="log"):
    """Rand index of the grouping of moving frames and pair accuracy on single-body frames."""
    from riseg.bfif import compute_bfifs, group_bfifs, pair_features, sample_frames
    from riseg.kde import posterior_same
    from riseg.scene import render_labels

    s0, _, mask, flow, sseed = step
    ft, ft1 = sample_frames(mask, flow, sampler, sseed)
    tw = compute_bfifs(ft, ft1, method)
    g = group_bfifs(tw, ft, model, 0.5, sampler.move_eps, sampler.pixel_pitch, sampler.feature)
    body = frame_bodies(ft, render_labels(s0))
    mv = np.array(g.moving, dtype=int)
    # frames straddling two bodies count as their own singleton bodies
    truth = np.where(body[mv] > 0, body[mv], -1 - np.arange(len(mv)))
    lab = g.label_of()
    ri = rand_index([lab[m] for m in mv], truth)
    single = mv[body[mv] > 0]
    i, j = np.triu_indices(len(single), k=1)
    if len(i):
        p = np.asarray(posterior_same(model, pair_features([tw[k] for k in single], sampler.feature))) >= 0.5
        correct = int(np.sum(p == (body[single][i] == body[single][j])))
    else:
        correct = 0
    return ri, correct, len(i)


def split_fixture(seed, model, noise_sigma=0.0):
    """Two touching bodies fused by the static segmenter, then pushed apart once.

    Returns ``(corrected, gt_t1, static_t1, scene_t, scene_t1)`` or None when
    the push gives both bodies the same motion.
    """
    from riseg.bfif import SamplerConfig, compute_bfifs, group_bfifs, sample_frames
    from riseg.correction import CorrectionConfig, correct_mask, project_mask, warp_flow
    from riseg.oracles import OracleConfig, oracle_flow, oracle_static_seg
    from riseg.scene import PushAction, apply_push, generate_scene, render_labels

    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5917]))
    oracle = OracleConfig(p_merge=1.0)
    s0 = generate_scene(int(rng.integers(2**31)), 2)
    body = s0.bodies[int(rng.integers(2))]
    verts = body.world_vertices()
    vx, vy = verts[int(rng.integers(len(verts)))]
    cx, cy = body.centroid()
    r, c = s0.world_to_pixel(vx, vy)
    s1 = apply_push(s0, PushAction((float(r), float(c)), (cy - vy, cx - vx), 0.02))
    if not motions_distinct(s0, s1):
        return None
    m0, _ = oracle_static_seg(s0, seed, oracle)
    m1, _ = oracle_static_seg(s1, seed, oracle)
    flow = oracle_flow(s0, s1, noise_sigma, seed)
    sampler = SamplerConfig.for_noise(noise_sigma)
    ft, ft1 = sample_frames(m0, flow, sampler, seed)
    g = group_bfifs(compute_bfifs(ft, ft1), ft, model, 0.5, sampler.move_eps)
    proj = project_mask(m0, flow, m1)
    out = correct_mask(proj, m1, g, ft1, warp_flow(m0, flow, m1), CorrectionConfig.for_noise(noise_sigma))
    return out, render_labels(s1), m1, s0, s1
