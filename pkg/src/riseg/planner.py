"""Uncertainty-driven push selection.

Confident object pixels and ambiguous pixels of the uncertainty heatmap are
clustered separately; a pair of nearby confident clusters with an ambiguous
cluster between them is chosen, and one of them is pushed sideways, across
the line joining the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput
from .scene import PushAction


@dataclass(frozen=True)
class PlannerConfig:
    l_u: int = 150
    l_l: int = 120
    d_a: float = 0.10
    d_b: float = 0.04
    d_push: float = 0.02
    k_max: int = 8
    theta_perp_deg: float = 10.0
    pixel_pitch: float = 0.002
    min_elbow: float = 0.25
    min_chord_slope: float = 1.1

    def __post_init__(self):
        # l_l = 256 switches the uncertain band off
        if not (self.l_u > self.l_l or self.l_l == 256):
            raise ValueError("l_u must exceed l_l")
        if min(self.d_a, self.d_b, self.d_push) <= 0:
            raise ValueError("d_a, d_b and d_push must be positive")


@dataclass(frozen=True, eq=False)
class ClusterSet:
    """Cluster centres (row, col), the clustered pixels and their assignment."""

    centers: np.ndarray
    pixels: np.ndarray
    assignments: np.ndarray
    inertia: np.ndarray
    kind: str = "certain"

    @property
    def k(self) -> int:
        return len(self.centers)


def threshold_pixels(u: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """(row, col) of pixels with ``lo <= u < hi`` in row-major order; ``hi=256`` is open."""
    if not 0 <= lo < hi <= 256:
        raise ValueError("need 0 <= lo < hi <= 256")
    u = np.asarray(u)
    sel = u >= lo
    if hi < 256:
        sel &= u < hi
    return np.argwhere(sel)


def _plus_plus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(len(x))]]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(len(x))
        else:
            idx = rng.choice(len(x), p=d2 / total)
        centers.append(x[idx])
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return np.array(centers, dtype=float)


def _sq_dist(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = np.sum(x * x, axis=1)[:, None] + np.sum(centers * centers, axis=1)[None, :] - 2.0 * x @ centers.T
    return np.maximum(d2, 0.0)


def lloyd(x: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 100, tol: float = 1e-6):
    """Lloyd iterations from a k-means++ start. Returns (centers, labels, inertia)."""
    centers = _plus_plus_init(x, k, rng)
    for _ in range(max_iter):
        labels = _sq_dist(x, centers).argmin(axis=1)
        counts = np.bincount(labels, minlength=k)
        new = centers.copy()
        filled = counts > 0
        for dim in range(x.shape[1]):
            new[filled, dim] = np.bincount(labels, weights=x[:, dim], minlength=k)[filled] / counts[filled]
        shift = np.max(np.linalg.norm(new - centers, axis=1))
        centers = new
        if shift <= tol:
            break
    labels = _sq_dist(x, centers).argmin(axis=1)
    inertia = float(np.sum((x - centers[labels]) ** 2))
    return centers, labels, inertia


def elbow_k(inertia, min_elbow: float = 0.25, min_chord_slope: float = 1.1) -> int:
    """Pick k at the sharpest bend of the inertia curve on log-log axes.

    ``inertia[i]`` is the inertia at k = i + 1. Within one compact 2-D blob
    inertia falls roughly like 1/k, a straight line of slope -1 on log-log
    axes; a real cluster count shows up as a steep stretch followed by a
    shallow one. A candidate k must have an average log-log slope from 1 to k
    of at least ``min_chord_slope`` (steeper than a single blob) and a bend
    above ``min_elbow``. Returns 1 when no candidate qualifies; ties go to
    the smaller k.
    """
    inertia = np.asarray(inertia, dtype=float)
    n = len(inertia)
    if n < 3:
        # no bend to measure; split only on a drop far steeper than one blob gives
        return 2 if n == 2 and inertia[1] < 0.25 * inertia[0] else 1
    floor = max(inertia[0], 1.0) * 1e-12
    logi = np.log(np.maximum(inertia, floor))
    logk = np.log(np.arange(1, n + 1))
    slope = -np.diff(logi) / np.diff(logk)  # slope[k-2] spans k-1 -> k
    best_k, best = 1, min_elbow
    for k in range(2, n):
        chord = (logi[0] - logi[k - 1]) / logk[k - 1]
        bend = slope[k - 2] - slope[k - 1]
        if chord >= min_chord_slope and bend > best:
            best_k, best = k, bend
    return best_k


def kmeans_elbow(pixels, k_max: int = 8, seed: int = 0, kind: str = "certain", min_elbow: float = 0.25,
                 n_init: int = 3, min_chord_slope: float = 1.1) -> ClusterSet:
    """k-means over pixel coordinates for k = 1..k_max, k chosen by the elbow."""
    x = np.asarray(pixels, dtype=float).reshape(-1, 2)
    if len(x) == 0:
        raise EmptyInput("no pixels to cluster")
    kmax = max(1, min(int(k_max), len(np.unique(x, axis=0))))
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xC1]))
    fits = []
    for k in range(1, kmax + 1):
        best = None
        for _ in range(n_init if k > 1 else 1):
            fit = lloyd(x, k, rng)
            if best is None or fit[2] < best[2]:
                best = fit
        fits.append(best)
    inertia = np.array([f[2] for f in fits])
    k = elbow_k(inertia, min_elbow, min_chord_slope)
    centers, labels, _ = fits[k - 1]
    return ClusterSet(centers, x.astype(int), labels, inertia, kind)


def point_segment_distance(p, a, b) -> float:
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def cluster_boundary(clusters: ClusterSet, index: int) -> np.ndarray:
    """Pixels of cluster ``index`` with a 4-neighbour outside the cluster."""
    pts = clusters.pixels[clusters.assignments == index]
    if len(pts) == 0:
        return pts
    members = {(int(r), int(c)) for r, c in pts}
    out = [
        (r, c)
        for r, c in pts
        if any((r + dr, c + dc) not in members for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)))
    ]
    return np.array(out, dtype=int).reshape(-1, 2)


def select_pair(certain: ClusterSet, uncertain: ClusterSet, cfg: PlannerConfig):
    """Closest qualifying ordered pair of certain centres, or None."""
    best = None
    cc, uc = certain.centers, uncertain.centers
    for i in range(len(cc)):
        for j in range(len(cc)):
            if i == j:
                continue
            dist_m = np.linalg.norm(cc[i] - cc[j]) * cfg.pixel_pitch
            if dist_m > cfg.d_a:
                continue
            gap = min(point_segment_distance(c, cc[i], cc[j]) for c in uc) * cfg.pixel_pitch
            if gap > cfg.d_b:
                continue
            if best is None or dist_m < best[0]:
                best = (dist_m, i, j)
    return None if best is None else best[1:]


def find_action(u: np.ndarray, cfg: PlannerConfig | None = None, seed: int = 0) -> PushAction | None:
    """Choose a short push next to an uncertain region, or None when there is none."""
    cfg = cfg or PlannerConfig()
    certain_px = threshold_pixels(u, cfg.l_u, 256)
    uncertain_px = threshold_pixels(u, cfg.l_l, cfg.l_u) if cfg.l_l < cfg.l_u and cfg.l_l < 256 else np.empty((0, 2))
    if len(certain_px) < 2 or len(uncertain_px) == 0:
        return None
    certain = kmeans_elbow(certain_px, cfg.k_max, seed, "certain", cfg.min_elbow, min_chord_slope=cfg.min_chord_slope)
    if certain.k < 2:
        return None
    uncertain = kmeans_elbow(uncertain_px, cfg.k_max, seed + 1, "uncertain", cfg.min_elbow,
                             min_chord_slope=cfg.min_chord_slope)
    pair = select_pair(certain, uncertain, cfg)
    if pair is None:
        return None
    i, j = pair
    ci, cj = certain.centers[i], certain.centers[j]
    axis = (cj - ci) / np.linalg.norm(cj - ci)
    boundary = cluster_boundary(certain, i)
    if len(boundary) == 0:
        return None
    spokes = boundary - ci
    norms = np.linalg.norm(spokes, axis=1)
    ok = norms > 0
    cos = np.zeros(len(boundary))
    cos[ok] = np.abs(spokes[ok] @ axis) / norms[ok]
    candidates = boundary[ok & (cos <= np.sin(np.radians(cfg.theta_perp_deg)))]
    if len(candidates) == 0:
        return None
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xAC7]))
    p = candidates[rng.integers(len(candidates))]
    direction = (ci - p) / np.linalg.norm(ci - p)
    return PushAction((int(p[0]), int(p[1])), (float(direction[0]), float(direction[1])), cfg.d_push)
