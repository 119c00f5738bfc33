"""Carry the accumulated label mask through a push and re-split it by motion.

The mask from the previous observation is pushed forward along the flow,
then every frame group plants seed labels at its tracked anchors and grows
them over pixels whose flow matches their neighbour's. Regions a group
cannot account for keep their old label, so earlier splits survive.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .bfif import FrameGrouping
from .errors import ShapeMismatch
from .oracles import FlowField

_NEIGHBOURS = ((-1, 0), (1, 0), (0, -1), (0, 1))


@dataclass(frozen=True)
class CorrectionConfig:
    """Mask-correction settings.

    Attributes
    ----------
    grad_eps : float
        Largest flow difference (pixels) between neighbours for the fill to
        spread.
    min_region : int
        Smaller regions without seeds are absorbed by a neighbour.
    flow_window : int
        Radius of the same-label median applied to the flow before filling.
    min_group_frames : int
        Groups with fewer frames are treated as noise and ignored.
    cover_slack : float
        A lone group may keep its region's old label only if it leaves at
        most this fraction (or ``min_region`` pixels) of the region unfilled.
    hole_reach : float
        Unvoted foreground pixels copy the nearest voted label within this
        many pixels.
    """

    grad_eps: float = 0.75
    min_region: int = 12
    flow_window: int = 2
    min_group_frames: int = 2
    cover_slack: float = 0.05
    hole_reach: float = 3.0

    def __post_init__(self):
        if not self.grad_eps > 0:
            raise ValueError("grad_eps must be positive")
        if self.min_region < 1:
            raise ValueError("min_region must be at least 1")

    @classmethod
    def for_noise(cls, sigma: float, **overrides) -> "CorrectionConfig":
        base = dict(flow_window=0 if sigma <= 0 else 2)
        base.update(overrides)
        return cls(**base)


def _check_shapes(*arrays):
    shapes = {np.shape(a) for a in arrays if a is not None}
    if len(shapes) > 1:
        raise ShapeMismatch(f"shapes differ: {sorted(shapes)}")


def _splat(prev: np.ndarray, flow: FlowField, static: np.ndarray | None):
    """Forward-map labelled pixels; returns target label and source index rasters."""
    h, w = prev.shape
    rows, cols = np.nonzero(prev)
    tr = np.rint(rows + flow.dv[rows, cols]).astype(int)
    tc = np.rint(cols + flow.du[rows, cols]).astype(int)
    keep = (tr >= 0) & (tr < h) & (tc >= 0) & (tc < w)
    if static is not None:
        keep[keep] &= static[tr[keep], tc[keep]] != 0
    src = (rows * w + cols)[keep]
    key = (tr * w + tc)[keep]
    mag = np.hypot(flow.du[rows, cols], flow.dv[rows, cols])[keep]
    # per target: the fastest voter, then the earliest in row-major order
    order = np.lexsort((src, -mag, key))
    first = np.unique(key[order], return_index=True)[1]
    win = order[first]
    labels = np.zeros(h * w, dtype=np.int64)
    source = np.full(h * w, -1, dtype=np.int64)
    labels[key[win]] = prev.ravel()[src[win]]
    source[key[win]] = src[win]
    return labels.reshape(h, w), source.reshape(h, w)


def _fill_holes(labels, source, static, reach):
    """Give unvoted static-foreground pixels the nearest voted label (or the static one)."""
    hole = (labels == 0) & (static != 0)
    if not hole.any():
        return labels, source
    voted = labels != 0
    if voted.any():
        dist, (ir, ic) = ndimage.distance_transform_edt(~voted, return_indices=True)
        near = hole & (dist <= reach)
        labels = labels.copy()
        source = source.copy()
        labels[near] = labels[ir[near], ic[near]]
        source[near] = source[ir[near], ic[near]]
        hole &= ~near
    labels[hole] = static[hole]
    return labels, source


def project_mask(prev: np.ndarray, flow: FlowField, static: np.ndarray | None = None,
                 hole_reach: float = 3.0) -> np.ndarray:
    """Advance a label mask one step along ``flow``.

    Each labelled pixel votes for the pixel it lands on; where votes collide
    the faster pixel wins. When the current ``static`` mask is given, votes
    landing on its background are dropped and unvoted static foreground is
    filled from the nearest vote within ``hole_reach`` pixels,
    otherwise from the static label itself.
    """
    prev = np.asarray(prev)
    _check_shapes(prev, flow.du, static)
    labels, source = _splat(prev, flow, None if static is None else np.asarray(static))
    if static is not None:
        labels, source = _fill_holes(labels, source, np.asarray(static), hole_reach)
    return labels.astype(prev.dtype if prev.dtype.kind == "i" else np.int32)


def warp_flow(prev: np.ndarray, flow: FlowField, static: np.ndarray | None = None,
              hole_reach: float = 3.0) -> FlowField:
    """The flow of whichever pixel landed on each target pixel; zero elsewhere."""
    prev = np.asarray(prev)
    _check_shapes(prev, flow.du, static)
    labels, source = _splat(prev, flow, None if static is None else np.asarray(static))
    if static is not None:
        labels, source = _fill_holes(labels, source, np.asarray(static), hole_reach)
    du = np.zeros(prev.shape)
    dv = np.zeros(prev.shape)
    ok = source >= 0
    du[ok] = flow.du.ravel()[source[ok]]
    dv[ok] = flow.dv.ravel()[source[ok]]
    return FlowField(du, dv)


def region_median(values: np.ndarray, regions: np.ndarray, radius: int) -> np.ndarray:
    """Median of ``values`` over a square window restricted to the centre's region.

    Pixels with region 0 are left as they are.
    """
    values = np.asarray(values, dtype=float)
    if radius <= 0:
        return values
    h, w = values.shape
    rows, cols = np.nonzero(regions)
    if len(rows) == 0:
        return values
    off = np.arange(-radius, radius + 1)
    dr, dc = (a.ravel() for a in np.meshgrid(off, off, indexing="ij"))
    nr = rows[:, None] + dr[None, :]
    nc = cols[:, None] + dc[None, :]
    inside = (nr >= 0) & (nr < h) & (nc >= 0) & (nc < w)
    nr = np.clip(nr, 0, h - 1)
    nc = np.clip(nc, 0, w - 1)
    same = inside & (regions[nr, nc] == regions[rows, cols][:, None])
    win = np.where(same, values[nr, nc], np.nan)
    out = values.copy()
    out[rows, cols] = np.nanmedian(win, axis=1)
    return out


@dataclass
class _Subgroup:
    group: int
    old_label: int
    seeds: list


def _subgroups(groups, frames_t1, projected, cfg) -> list:
    """Seeds of each kept group, split by the projected label under them."""
    h, w = projected.shape
    out = []
    for gi, members in enumerate(groups):
        pix = np.rint(np.vstack([frames_t1[i].anchor_pixels for i in members])).astype(int)
        pix = pix[(pix[:, 0] >= 0) & (pix[:, 0] < h) & (pix[:, 1] >= 0) & (pix[:, 1] < w)]
        if len(pix) == 0:
            continue
        pix = np.unique(pix, axis=0)  # row-major order
        labs = projected[pix[:, 0], pix[:, 1]]
        nz = labs[labs > 0]
        major = int(np.bincount(nz).argmax()) if len(nz) else 0
        keys = np.where(labs > 0, labs, major)
        for key in np.unique(keys):
            seeds = [(int(r), int(c)) for r, c in pix[keys == key]]
            out.append(_Subgroup(gi, int(key), seeds))
    return out


def _flood(subs, support, projected, fu, fv, grad_eps):
    """Multi-source fill; a pixel belongs to the first front that pops it."""
    h, w = support.shape
    owner = np.full((h, w), -1, dtype=np.int64)
    heap = [(0, s, r * w + c) for s, sg in enumerate(subs) for r, c in sg.seeds]
    heapq.heapify(heap)
    eps2 = grad_eps * grad_eps
    while heap:
        d, s, idx = heapq.heappop(heap)
        r, c = divmod(idx, w)
        if owner[r, c] != -1:
            continue
        owner[r, c] = s
        home = subs[s].old_label
        for dr, dc in _NEIGHBOURS:
            qr, qc = r + dr, c + dc
            if not (0 <= qr < h and 0 <= qc < w) or owner[qr, qc] != -1 or not support[qr, qc]:
                continue
            lab = projected[qr, qc]
            if lab != 0 and home != 0 and lab != home:
                continue
            if (fu[qr, qc] - fu[r, c]) ** 2 + (fv[qr, qc] - fv[r, c]) ** 2 > eps2:
                continue
            heapq.heappush(heap, (d + 1, s, qr * w + qc))
    return owner


def _absorb_specks(out, seed_mask, min_region):
    """Fold seedless components below ``min_region`` into their most-bordering neighbour."""
    for lab in [l for l in np.unique(out) if l > 0]:
        comp, n = ndimage.label(out == lab)
        for k in range(1, n + 1):
            piece = comp == k
            if piece.sum() >= min_region or (piece & seed_mask).any():
                continue
            ring = ndimage.binary_dilation(piece) & ~piece
            neigh = out[ring]
            neigh = neigh[(neigh > 0) & (neigh != lab)]
            out[piece] = int(np.bincount(neigh).argmax()) if len(neigh) else 0
    return out


def _split_disconnected(out, next_label, min_region, seed_mask):
    """Give every further sizeable seedless piece of a label a fresh label of its own.

    Pieces holding seeds keep their label, as does the largest piece.
    """
    for lab in [l for l in np.unique(out) if l > 0]:
        comp, n = ndimage.label(out == lab)
        if n <= 1:
            continue
        idx = np.arange(1, n + 1)
        sizes = ndimage.sum(np.ones_like(comp), comp, index=idx)
        seeded = ndimage.maximum(seed_mask, comp, index=idx) > 0
        keep = int(np.argmax(sizes)) + 1
        for k in range(1, n + 1):
            if k != keep and not seeded[k - 1] and sizes[k - 1] >= min_region:
                out[comp == k] = next_label
                next_label += 1
    return out, next_label


def correct_mask(projected: np.ndarray, static_mask: np.ndarray, groups: FrameGrouping, frames_t1, flow: FlowField,
                 cfg: CorrectionConfig | None = None) -> np.ndarray:
    """Relabel the projected mask from frame groups.

    Parameters
    ----------
    projected : ndarray
        Accumulated labels already advanced to the new observation.
    static_mask : ndarray
        Labels of the static segmenter for the new observation.
    groups : FrameGrouping
        Frame groups; each becomes one label.
    frames_t1 : list of BodyFrame
        Frames after tracking; their anchors are the seed pixels.
    flow : FlowField
        Flow on the new pixel grid, see ``warp_flow``.

    Returns
    -------
    ndarray
        Corrected labels. Without any usable group ``projected`` is returned
        unchanged.
    """
    cfg = cfg or CorrectionConfig()
    projected = np.asarray(projected)
    static_mask = np.asarray(static_mask)
    _check_shapes(projected, static_mask, flow.du)
    kept = [g for g in groups.groups if len(g) >= cfg.min_group_frames]
    if not kept:
        return projected.copy()
    for g in kept:
        if min(g) < 0 or max(g) >= len(frames_t1):
            raise IndexError("group refers to a frame that does not exist")

    support = (static_mask != 0) | (projected != 0)
    regions = np.where(projected > 0, projected, np.where(static_mask > 0, -static_mask.astype(np.int64), 0))
    fu = region_median(flow.du, regions, cfg.flow_window)
    fv = region_median(flow.dv, regions, cfg.flow_window)

    subs = _subgroups(kept, frames_t1, projected, cfg)
    if not subs:
        return projected.copy()
    owner = _flood(subs, support, projected, fu, fv, cfg.grad_eps)

    out = projected.astype(np.int64).copy()
    next_label = int(max(projected.max(initial=0), static_mask.max(initial=0))) + 1
    claims = {}
    for s, sg in enumerate(subs):
        claims.setdefault(sg.old_label, []).append(s)
    new_label = {}
    for old in sorted(claims):
        members = claims[old]
        if old > 0 and len(members) == 1:
            region = projected == old
            left = int(np.count_nonzero(region & (owner != members[0])))
            if left <= max(cfg.min_region, cfg.cover_slack * region.sum()):
                new_label[members[0]] = old
                continue
        for s in members:
            new_label[s] = next_label
            next_label += 1

    seed_mask = np.zeros(out.shape, dtype=bool)
    for s, sg in enumerate(subs):
        out[owner == s] = new_label[s]
    for s, sg in enumerate(subs):
        for r, c in sg.seeds:
            out[r, c] = new_label[s]
            seed_mask[r, c] = True

    out = _absorb_specks(out, seed_mask, cfg.min_region)
    out, _ = _split_disconnected(out, next_label, cfg.min_region, seed_mask)
    return out.astype(np.int32)
