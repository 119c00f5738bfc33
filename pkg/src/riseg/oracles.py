"""Simulator-backed stand-ins for the static segmenter and the optical-flow network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import MismatchedScenes
from .scene import SceneState, render_labels


@dataclass(frozen=True, eq=False)
class FlowField:
    """Per-pixel displacement in pixels: ``du`` along columns, ``dv`` along rows."""

    du: np.ndarray
    dv: np.ndarray

    def __post_init__(self):
        du = np.asarray(self.du, dtype=float)
        dv = np.asarray(self.dv, dtype=float)
        if du.shape != dv.shape or du.ndim != 2:
            raise ValueError("du and dv must be equal-shape 2-D arrays")
        if not (np.all(np.isfinite(du)) and np.all(np.isfinite(dv))):
            raise ValueError("flow must be finite")
        object.__setattr__(self, "du", du)
        object.__setattr__(self, "dv", dv)

    @classmethod
    def zeros(cls, shape) -> "FlowField":
        return cls(np.zeros(shape), np.zeros(shape))

    @property
    def shape(self):
        return self.du.shape

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.du, self.dv)

    def sample(self, rows, cols):
        """Bilinear lookup at real-valued (row, col); edges are clamped."""
        coords = np.vstack([np.ravel(rows), np.ravel(cols)])
        du = ndimage.map_coordinates(self.du, coords, order=1, mode="nearest")
        dv = ndimage.map_coordinates(self.dv, coords, order=1, mode="nearest")
        return du, dv


@dataclass(frozen=True)
class OracleConfig:
    """Static-segmentation oracle settings.

    ``u_core``/``u_ambig``/``u_edge`` straddle the planner thresholds
    (150 and 120) once ``jitter`` is added.
    """

    p_merge: float = 1.0
    touch_eps: float = 0.002
    core_margin: int = 2
    band_px: int = 4
    u_core: int = 200
    u_ambig: int = 130
    u_edge: int = 90
    jitter: int = 10


class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            lo, hi = min(ra, rb), max(ra, rb)
            self.parent[hi] = lo


def merged_pairs(scene: SceneState, seed: int, cfg: OracleConfig) -> list[tuple[int, int]]:
    """Touching body pairs the oracle fuses.

    Each pair's coin flip depends only on ``seed`` and the two ids, so a pair
    that stays in contact keeps the same fate across observations.
    """
    polys = {b.id: b.polygon() for b in scene.bodies}
    ids = sorted(polys)
    out = []
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if polys[a].distance(polys[b]) >= cfg.touch_eps:
                continue
            u = np.random.default_rng(np.random.SeedSequence([int(seed), a, b, 0x3E26])).random()
            if u < cfg.p_merge:
                out.append((a, b))
    return out


def _region_boundary(labels: np.ndarray) -> np.ndarray:
    """Foreground pixels with a 4-neighbour of another label (image edge counts)."""
    pad = np.pad(labels, 1, constant_values=0)
    c = pad[1:-1, 1:-1]
    diff = (
        (pad[:-2, 1:-1] != c) | (pad[2:, 1:-1] != c) | (pad[1:-1, :-2] != c) | (pad[1:-1, 2:] != c)
    )
    return diff & (c != 0)


def oracle_static_seg(scene: SceneState, seed: int, config: OracleConfig | None = None):
    """Under-segmenting static segmenter.

    Returns ``(labels, uncertainty)``: an int32 label raster in which fused
    touching bodies share one label (the smallest member id), and a uint8
    confidence map with high values in region cores, mid values on fused
    contact seams and low values on ordinary region edges.
    """
    cfg = config or OracleConfig()
    gt = render_labels(scene)
    h, w = gt.shape
    pairs = merged_pairs(scene, seed, cfg)
    uf = _UnionFind(scene.ids)
    for a, b in pairs:
        uf.union(a, b)

    labels = gt.copy()
    for bid in scene.ids:
        root = uf.find(bid)
        if root != bid:
            labels[gt == bid] = root

    masks = {bid: gt == bid for bid in scene.ids}
    dist = {}

    def dist_to(bid):
        if bid not in dist:
            m = masks[bid]
            dist[bid] = ndimage.distance_transform_edt(~m) if m.any() else np.full(gt.shape, np.inf)
        return dist[bid]

    # close sub-pixel gaps between fused bodies so each fused region is one blob
    reach = max(1.0, cfg.touch_eps / scene.pixel_pitch) + 0.5
    for a, b in pairs:
        bridge = (labels == 0) & (dist_to(a) <= reach) & (dist_to(b) <= reach)
        labels[bridge] = uf.find(a)

    # a fused group that is still split in the raster is reported piecewise
    for root in sorted({uf.find(b) for b in scene.ids}):
        region = labels == root
        comp, n = ndimage.label(region)
        if n <= 1:
            continue
        sizes = ndimage.sum(region, comp, index=np.arange(1, n + 1))
        keep = int(np.argmax(sizes)) + 1
        for k in range(1, n + 1):
            if k == keep:
                continue
            piece = comp == k
            members = np.unique(gt[piece])
            members = members[members > 0]
            labels[piece] = int(members.min()) if len(members) else 0

    fg = labels != 0
    boundary = _region_boundary(labels)
    to_edge = ndimage.distance_transform_edt(~boundary) if boundary.any() else np.full(gt.shape, np.inf)
    core = fg & (to_edge > cfg.core_margin)
    seam = np.zeros(gt.shape, dtype=bool)
    for a, b in pairs:
        if not (masks[a].any() and masks[b].any()):
            continue
        if np.bincount(labels[masks[a]]).argmax() != np.bincount(labels[masks[b]]).argmax():
            continue
        seam |= fg & (dist_to(a) <= cfg.band_px) & (dist_to(b) <= cfg.band_px)

    u = np.zeros(gt.shape, dtype=np.int32)
    u[fg] = cfg.u_edge
    u[core] = cfg.u_core
    u[seam] = cfg.u_ambig
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x0A11]))
    noise = rng.integers(-cfg.jitter, cfg.jitter + 1, size=gt.shape)
    u[fg] += noise[fg]
    return labels.astype(np.int32), np.clip(u, 0, 255).astype(np.uint8)


def oracle_flow(scene_t: SceneState, scene_t1: SceneState, noise_sigma: float = 0.0, seed: int = 0) -> FlowField:
    """Exact rigid flow of every labelled pixel of ``scene_t``, plus Gaussian noise."""
    if sorted(scene_t.ids) != sorted(scene_t1.ids):
        raise MismatchedScenes("scenes have different body ids")
    if scene_t.image_size != scene_t1.image_size or scene_t.pixel_pitch != scene_t1.pixel_pitch:
        raise MismatchedScenes("scenes have different rasterization settings")
    labels = render_labels(scene_t)
    h, w = labels.shape
    du = np.zeros((h, w))
    dv = np.zeros((h, w))
    rows, cols = np.nonzero(labels)
    if len(rows):
        x, y = scene_t.pixel_to_world(rows, cols)
        pts = np.column_stack([x, y, np.zeros_like(x)])
        ids = labels[rows, cols]
        for bid in np.unique(ids):
            sel = ids == bid
            if scene_t1.body(int(bid)).same_as(scene_t.body(int(bid))):
                continue
            disp = scene_t1.body(int(bid)).pose @ scene_t.body(int(bid)).pose.inverse()
            moved = disp.apply(pts[sel])
            du[rows[sel], cols[sel]] = (moved[:, 0] - pts[sel, 0]) / scene_t.pixel_pitch
            dv[rows[sel], cols[sel]] = (moved[:, 1] - pts[sel, 1]) / scene_t.pixel_pitch
    if noise_sigma > 0:
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xF10]))
        du = du + rng.normal(0.0, noise_sigma, (h, w))
        dv = dv + rng.normal(0.0, noise_sigma, (h, w))
    return FlowField(du, dv)
