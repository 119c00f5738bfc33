"""Body frames on labelled pixels, their spatial twists and twist-based grouping.

Every rigid body has one spatial twist, so frames attached anywhere on the
same body report the same twist while frames on bodies that move
differently do not. Frames are built from pixel triplets, tracked through
the flow field and grouped by a pairwise same-body posterior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CollinearTriplet, InsufficientFrames
from .kde import GroupingModel, posterior_same
from .oracles import FlowField
from .se3 import AREA_EPS, BodyFrame, Twist, exp_se3, frame_from_triplet, spatial_twist

WORKSPACE_ORIGIN = (-0.256, -0.256)


@dataclass(frozen=True)
class SamplerConfig:
    """Frame sampling settings.

    ``rigid_tol`` (pixels) drops triplets whose pairwise anchor distances
    change by more than this between the two snapshots; such triplets
    straddle bodies that moved differently. ``min_height`` (pixels) rejects
    thin triangles whose orientation flow noise could flip. Anchor flow is
    the mean over a ``(2 * flow_window + 1)``-square window restricted to
    the anchor's own mask label; ``flow_window = 0`` samples the single
    pixel. ``origin`` is the world position
    of the top-left pixel corner.
    """

    n_samples: int = 300
    d_c: float = 0.03
    move_eps: float = 0.5
    rigid_tol: float = 0.75
    min_height: float = 3.0
    flow_window: int = 2
    pixel_pitch: float = 0.002
    origin: tuple = WORKSPACE_ORIGIN
    feature: str = "norm"

    @classmethod
    def for_noise(cls, sigma: float, **overrides) -> "SamplerConfig":
        """Settings matched to a flow noise level (pixels).

        Exact flow needs no smoothing and allows a near-zero rigidity
        tolerance; noisy flow gets a local mean and a looser tolerance.
        """
        if sigma <= 0:
            base = dict(flow_window=0, rigid_tol=1e-6)
        else:
            base = dict(flow_window=2, rigid_tol=max(0.75, 2.5 * sigma))
        base.update(overrides)
        return cls(**base)

    def __post_init__(self):
        if self.n_samples < 9:
            raise ValueError("n_samples must be at least 9")
        if not self.d_c > 0:
            raise ValueError("d_c must be positive")
        if self.feature not in ("norm", "abs"):
            raise ValueError("feature must be 'norm' or 'abs'")


@dataclass(frozen=True, eq=False)
class PairFeature:
    """Rotation and translation parts of the difference between two twists."""

    d_omega: float
    d_linear: float

    def __post_init__(self):
        if not (np.isfinite(self.d_omega) and np.isfinite(self.d_linear)):
            raise ValueError("features must be finite")
        if self.d_omega < 0 or self.d_linear < 0:
            raise ValueError("features must be non-negative")

    @classmethod
    def between(cls, a: Twist, b: Twist) -> "PairFeature":
        return cls(float(np.linalg.norm(a.angular - b.angular)), float(np.linalg.norm(a.linear - b.linear)))

    def vector(self) -> np.ndarray:
        return np.array([self.d_omega, self.d_linear])


@dataclass(frozen=True)
class FrameGrouping:
    """Groups of frame indices judged to share one twist.

    ``moving`` lists the frames that passed the motion gate; ``groups``
    partitions exactly those, ordered by their smallest index.
    """

    groups: tuple
    moving: tuple
    stationary: tuple

    def label_of(self) -> dict:
        return {i: g for g, members in enumerate(self.groups) for i in members}


def pixels_to_world(pixels, pitch: float = 0.002, origin=WORKSPACE_ORIGIN) -> np.ndarray:
    """(row, col) pixel positions to (x, y, 0) world points at pixel centres."""
    p = np.asarray(pixels, dtype=float).reshape(-1, 2)
    x = origin[0] + (p[:, 1] + 0.5) * pitch
    y = origin[1] + (p[:, 0] + 0.5) * pitch
    return np.column_stack([x, y, np.zeros(len(p))])


def _pick_triplets(px: np.ndarray, labels: np.ndarray, reach: float, min_height: float = 0.0) -> list:
    """Greedy disjoint triplets of same-label samples within ``reach`` pixels.

    Each triplet starts at the next unused sample, takes the farthest
    admissible partner as its x-axis and the third point giving the largest
    triangle, then is ordered counter-clockwise in the world xy plane.
    """
    d = np.linalg.norm(px[:, None, :] - px[None, :, :], axis=-1)
    ok = (d <= reach) & (labels[:, None] == labels[None, :])
    np.fill_diagonal(ok, False)
    used = np.zeros(len(px), dtype=bool)
    out = []
    for i in range(len(px)):
        if used[i]:
            continue
        cand = np.flatnonzero(ok[i] & ~used)
        if len(cand) < 2:
            continue
        j = cand[np.argmax(d[i, cand])]
        rest = cand[(cand != j) & ok[j, cand]]
        if len(rest) == 0:
            continue
        # world x is the column, world y the row
        e1 = px[j] - px[i]
        e2 = px[rest] - px[i]
        cross = e1[1] * e2[:, 0] - e1[0] * e2[:, 1]
        k_pos = int(np.argmax(np.abs(cross)))
        if cross[k_pos] == 0 or abs(cross[k_pos]) < min_height * np.linalg.norm(e1):
            continue
        k = rest[k_pos]
        tri = (i, j, k) if cross[k_pos] > 0 else (j, i, k)
        used[[i, j, k]] = True
        out.append(tri)
    return out


def anchor_flow(mask: np.ndarray, flow: FlowField, anchors: np.ndarray, window: int):
    """Flow (du, dv) at integer anchors, averaged over same-label neighbours."""
    if window <= 0:
        return flow.sample(anchors[:, 0], anchors[:, 1])
    h, w = mask.shape
    du = np.empty(len(anchors))
    dv = np.empty(len(anchors))
    for n, (r, c) in enumerate(np.asarray(anchors, dtype=int)):
        r0, r1 = max(r - window, 0), min(r + window + 1, h)
        c0, c1 = max(c - window, 0), min(c + window + 1, w)
        same = mask[r0:r1, c0:c1] == mask[r, c]
        du[n] = flow.du[r0:r1, c0:c1][same].mean()
        dv[n] = flow.dv[r0:r1, c0:c1][same].mean()
    return du, dv


def sample_frames(mask: np.ndarray, flow: FlowField, cfg: SamplerConfig | None = None, seed: int = 0):
    """Sample body frames on labelled pixels and track them through ``flow``.

    Returns
    -------
    frames_t, frames_t1 : list of BodyFrame
        Aligned lists; ``frames_t1[i]`` is ``frames_t[i]`` after its anchors
        were displaced by the flow. ``object_hint`` holds the mask label.
    """
    cfg = cfg or SamplerConfig()
    mask = np.asarray(mask)
    if mask.shape != flow.shape:
        raise ValueError("mask and flow shapes differ")
    fg = np.argwhere(mask != 0)
    if len(fg) < 3:
        raise InsufficientFrames(f"only {len(fg)} labelled pixels")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5A3]))
    pick = rng.choice(len(fg), size=min(cfg.n_samples, len(fg)), replace=False)
    px = fg[pick]
    labels = mask[px[:, 0], px[:, 1]]
    # shave the reach so rounding never pushes a pair past d_c in metres
    triplets = _pick_triplets(px, labels, cfg.d_c / cfg.pixel_pitch * (1 - 1e-9), cfg.min_height)

    frames_t, frames_t1 = [], []
    for tri in triplets:
        a0 = px[list(tri)].astype(float)
        du, dv = anchor_flow(mask, flow, px[list(tri)], cfg.flow_window)
        a1 = a0 + np.column_stack([dv, du])
        d0 = np.linalg.norm(a0[:, None] - a0[None], axis=-1)
        d1 = np.linalg.norm(a1[:, None] - a1[None], axis=-1)
        if np.max(np.abs(d1 - d0)) > cfg.rigid_tol:
            continue
        e1, e2 = a1[1] - a1[0], a1[2] - a1[0]
        if e1[1] * e2[0] - e1[0] * e2[1] <= 0:
            continue  # orientation flipped while tracking
        w0 = pixels_to_world(a0, cfg.pixel_pitch, cfg.origin)
        w1 = pixels_to_world(a1, cfg.pixel_pitch, cfg.origin)
        try:
            p0 = frame_from_triplet(*w0, d_c=cfg.d_c)
            p1 = frame_from_triplet(*w1, area_eps=AREA_EPS)
        except CollinearTriplet:
            continue
        hint = int(labels[tri[0]])
        frames_t.append(BodyFrame(p0, a0, hint))
        frames_t1.append(BodyFrame(p1, a1, hint))
    if len(frames_t) < 3:
        raise InsufficientFrames(f"only {len(frames_t)} usable triplets")
    return frames_t, frames_t1


def compute_bfifs(frames_t, frames_t1, method: str = "log") -> list:
    """Spatial twist of each tracked frame over one unit time step."""
    if len(frames_t) != len(frames_t1):
        raise ValueError("frame lists are not aligned")
    return [spatial_twist(a.pose, b.pose, 1.0, method) for a, b in zip(frames_t, frames_t1)]


def pair_features(twists, mode: str = "norm") -> np.ndarray:
    """Features of every pair ``i < j`` in ``np.triu_indices`` order.

    ``"norm"`` gives (|d omega|, |d v|); ``"abs"`` the six absolute
    component differences.
    """
    if len(twists) == 0:
        return np.empty((0, 2 if mode == "norm" else 6))
    v = np.array([t.vector() for t in twists])
    i, j = np.triu_indices(len(v), k=1)
    diff = v[i] - v[j]
    if mode == "norm":
        return np.column_stack([np.linalg.norm(diff[:, :3], axis=1), np.linalg.norm(diff[:, 3:], axis=1)])
    if mode == "abs":
        return np.abs(diff)
    raise ValueError(f"unknown feature mode {mode!r}")


def anchor_motion(twists, frames_t, pixel_pitch: float = 0.002) -> np.ndarray:
    """Mean anchor displacement in pixels implied by each frame's twist."""
    out = np.empty(len(frames_t))
    for n, (tw, fr) in enumerate(zip(twists, frames_t)):
        rel = (fr.anchor_pixels - fr.anchor_pixels[0]) * pixel_pitch
        pts = fr.pose.translation + np.column_stack([rel[:, 1], rel[:, 0], np.zeros(3)])
        moved = exp_se3(tw, 1.0).apply(pts)
        out[n] = np.mean(np.linalg.norm(moved - pts, axis=1)) / pixel_pitch
    return out


def group_bfifs(twists, frames_t, model: GroupingModel, tau: float = 0.5, move_eps: float = 0.5,
                pixel_pitch: float = 0.002, mode: str = "norm") -> FrameGrouping:
    """Link moving frames whose pair posterior reaches ``tau``; groups are the components."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    if len(twists) != len(frames_t):
        raise ValueError("twists and frames are not aligned")
    motion = anchor_motion(twists, frames_t, pixel_pitch)
    moving = np.flatnonzero(motion >= move_eps)
    stationary = tuple(int(i) for i in np.flatnonzero(motion < move_eps))
    if len(moving) == 0:
        return FrameGrouping((), (), stationary)
    feats = pair_features([twists[i] for i in moving], mode)
    i, j = np.triu_indices(len(moving), k=1)
    if len(feats):
        linked = np.asarray(posterior_same(model, feats)) >= tau
    else:
        linked = np.zeros(0, dtype=bool)
    graph = coo_matrix((np.ones(int(linked.sum())), (i[linked], j[linked])), shape=(len(moving),) * 2)
    _, comp = connected_components(graph, directed=False)
    groups = {}
    for local, c in enumerate(comp):
        groups.setdefault(int(c), []).append(int(moving[local]))
    ordered = sorted((tuple(g) for g in groups.values()), key=lambda g: g[0])
    return FrameGrouping(tuple(ordered), tuple(int(m) for m in moving), stationary)
