"""Fit the same-body grouping model on simulated pushes with known body ids."""

from __future__ import annotations

import numpy as np

from .bfif import SamplerConfig, anchor_motion, compute_bfifs, pair_features, sample_frames
from .config import RunConfig
from .errors import InsufficientFrames, NoContact
from .kde import GroupingModel, KdeConfig, fit_grouping_model
from .oracles import OracleConfig, oracle_flow, oracle_static_seg
from .planner import find_action
from .scene import PushAction, apply_push, generate_scene, render_labels


def _random_push(scene, rng, distance):
    labels = render_labels(scene)
    px = np.argwhere(labels > 0)
    p = px[rng.integers(len(px))]
    ang = rng.uniform(0, 2 * np.pi)
    return PushAction((int(p[0]), int(p[1])), (np.sin(ang), np.cos(ang)), distance)


def simulate_pushes(episodes: int, seed: int = 0, cfg: RunConfig | None = None, n_objects=(4, 6)):
    """Pushed scene pairs ``(scene_t, scene_t1, oracle_seed)`` for training.

    Pushes come from the planner; when it has nothing to offer a random
    push on a random body is used instead so every episode contributes.
    """
    cfg = cfg or RunConfig()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x7A1]))
    out = []
    for _ in range(episodes):
        scene = generate_scene(int(rng.integers(2**31)), int(rng.integers(n_objects[0], n_objects[1] + 1)), cfg.generator)
        oracle_seed = int(rng.integers(2**31))
        for k in range(max(cfg.max_pushes, 1)):
            _, u = oracle_static_seg(scene, oracle_seed, cfg.oracle)
            action = find_action(u, cfg.planner, int(rng.integers(2**31)))
            if action is None:
                action = _random_push(scene, rng, cfg.planner.d_push)
            try:
                nxt = apply_push(scene, action, cfg.push)
            except NoContact:
                break
            out.append((scene, nxt, oracle_seed))
            scene = nxt
    return out


def labelled_pair_features(scene_t, scene_t1, mask, flow, sampler: SamplerConfig, seed: int, method: str = "log"):
    """Pair features of moving frames whose anchors all lie on one body, with same-body flags."""
    frames_t, frames_t1 = sample_frames(mask, flow, sampler, seed)
    twists = compute_bfifs(frames_t, frames_t1, method)
    gt = render_labels(scene_t)
    body = np.empty(len(frames_t), dtype=int)
    for n, fr in enumerate(frames_t):
        r, c = np.rint(fr.anchor_pixels).astype(int).T
        ids = gt[r, c]
        body[n] = ids[0] if np.all(ids == ids[0]) else 0
    moving = anchor_motion(twists, frames_t, sampler.pixel_pitch) >= sampler.move_eps
    keep = np.flatnonzero(moving & (body > 0))
    feats = pair_features([twists[i] for i in keep], sampler.feature)
    i, j = np.triu_indices(len(keep), k=1)
    return feats, body[keep][i] == body[keep][j]


def train_grouping_model(steps, sampler: SamplerConfig | None = None, kde_cfg: KdeConfig | None = None,
                         seed: int = 0, noise_sigma: float = 0.3, oracle: OracleConfig | None = None,
                         method: str = "log") -> GroupingModel:
    """Fit class densities on every labelled frame pair of the pushed ``steps``.

    Frames are sampled on the static segmentation of each pre-push scene,
    the same mask the pipeline samples on at its first push.
    """
    sampler = sampler or SamplerConfig.for_noise(noise_sigma)
    oracle = oracle or OracleConfig()
    same, diff = [], []
    for n, (scene_t, scene_t1, oracle_seed) in enumerate(steps):
        mask, _ = oracle_static_seg(scene_t, oracle_seed, oracle)
        flow = oracle_flow(scene_t, scene_t1, noise_sigma, seed=int(seed) * 1_000_003 + n)
        try:
            feats, flags = labelled_pair_features(scene_t, scene_t1, mask, flow, sampler, int(seed) + n, method)
        except InsufficientFrames:
            continue
        same.append(feats[flags])
        diff.append(feats[~flags])
    dim = 2 if sampler.feature == "norm" else 6
    same = np.vstack(same) if same else np.empty((0, dim))
    diff = np.vstack(diff) if diff else np.empty((0, dim))
    meta = {"n_steps": len(steps), "noise_sigma": noise_sigma, "seed": int(seed), "feature": sampler.feature}
    return fit_grouping_model(same, diff, kde_cfg, meta)


def train_command(episodes: int, seed: int = 0, cfg: RunConfig | None = None) -> GroupingModel:
    cfg = cfg or RunConfig()
    steps = simulate_pushes(episodes, seed, cfg)
    return train_grouping_model(steps, cfg.sampler, cfg.kde, seed, cfg.noise_sigma, cfg.oracle, cfg.twist_method)
