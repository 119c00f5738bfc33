"""Instance-segmentation scores: matched overlap and boundary P/R/F, object accuracy."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .errors import NoGtObjects, ShapeMismatch

ACCURACY_F = 0.75


def _f(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2.0 * p * r / (p + r)


def _check(pred, gt):
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"prediction {pred.shape} vs ground truth {gt.shape}")
    return pred, gt


def _table(pred, gt):
    """Positive labels of each mask, their sizes and the intersection counts."""
    pl, pinv = np.unique(pred.ravel(), return_inverse=True)
    gl, ginv = np.unique(gt.ravel(), return_inverse=True)
    counts = np.bincount(pinv.ravel() * len(gl) + ginv.ravel(), minlength=len(pl) * len(gl))
    inter = counts.reshape(len(pl), len(gl))
    psz, gsz = inter.sum(axis=1), inter.sum(axis=0)
    pk, gk = pl > 0, gl > 0
    return pl[pk], gl[gk], inter[np.ix_(pk, gk)], psz[pk], gsz[gk]


def inner_boundary(region: np.ndarray) -> np.ndarray:
    """Pixels of ``region`` with a 4-neighbour outside it; the image edge counts as outside."""
    pad = np.pad(region, 1, constant_values=False)
    inner = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    return region & ~inner


def _near(mask: np.ndarray, tol: int) -> np.ndarray:
    if tol <= 0:
        return mask
    return ndimage.binary_dilation(mask, structure=np.ones((2 * tol + 1, 2 * tol + 1), dtype=bool))


class _Boundaries:
    """Inner boundary of every label, kept as a crop padded by the tolerance."""

    def __init__(self, mask, labels, tol):
        self.shape = mask.shape
        self.tol = tol
        self.crops = {}
        self.sizes = {}
        objs = ndimage.find_objects(np.where(np.isin(mask, labels), mask, 0).astype(np.int64))
        for lab in labels:
            sl = objs[int(lab) - 1]
            r0, r1 = max(sl[0].start - tol, 0), min(sl[0].stop + tol, mask.shape[0])
            c0, c1 = max(sl[1].start - tol, 0), min(sl[1].stop + tol, mask.shape[1])
            # the boundary test sees the true image edge only where the crop reaches it
            region = np.pad(mask == lab, 1, constant_values=False)[r0 : r1 + 2, c0 : c1 + 2]
            b = inner_boundary(region)[1:-1, 1:-1]
            self.crops[int(lab)] = (r0, c0, b, _near(b, tol))
            self.sizes[int(lab)] = int(b.sum())

    @staticmethod
    def hits(a, b) -> int:
        """Boundary pixels of ``a`` within the tolerance of ``b``'s boundary."""
        ar, ac, ab, _ = a
        br, bc, _, bn = b
        r0, c0 = max(ar, br), max(ac, bc)
        r1, c1 = min(ar + ab.shape[0], br + bn.shape[0]), min(ac + ab.shape[1], bc + bn.shape[1])
        if r0 >= r1 or c0 >= c1:
            return 0
        sa = ab[r0 - ar : r1 - ar, c0 - ac : c1 - ac]
        sb = bn[r0 - br : r1 - br, c0 - bc : c1 - bc]
        return int(np.count_nonzero(sa & sb))


def _max_assignment(weights) -> list:
    """Maximum-weight partial assignment for non-negative integer weights.

    Shortest-augmenting-path Hungarian method on Python integers, so
    arbitrarily large weights compare exactly. Returns ``(row, col)`` pairs;
    pairs of weight zero may appear and are left to the caller.
    """
    n, m = len(weights), len(weights[0]) if len(weights) else 0
    transpose = n > m
    if transpose:
        weights = [list(col) for col in zip(*weights)]
        n, m = m, n
    top = max((w for row in weights for w in row), default=0)
    # 1-based potentials and matching as in the classic O(n^2 m) formulation
    u, v = [0] * (n + 1), [0] * (m + 1)
    match, way = [0] * (m + 1), [0] * (m + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [None] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta, j1 = None, 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = top - weights[i0 - 1][j - 1] - u[i0] - v[j]
                if minv[j] is None or cur < minv[j]:
                    minv[j], way[j] = cur, j0
                if delta is None or minv[j] < delta:
                    delta, j1 = minv[j], j
            for j in range(m + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    pairs = [(match[j] - 1, j - 1) for j in range(1, m + 1) if match[j]]
    return sorted((c, r) for r, c in pairs) if transpose else sorted(pairs)


class _Scoring:
    """Everything the metrics share: label table, boundaries and the matching."""

    def __init__(self, pred, gt, tol_px: int = 1):
        if tol_px < 0:
            raise ValueError("tol_px must be non-negative")
        pred, gt = _check(pred, gt)
        self.pl, self.gl, self.inter, self.psz, self.gsz = _table(pred, gt)
        self.pb = _Boundaries(pred, self.pl, tol_px)
        self.gb = _Boundaries(gt, self.gl, tol_px)
        self.tp_p = np.zeros(self.inter.shape, dtype=np.int64)
        self.tp_r = np.zeros(self.inter.shape, dtype=np.int64)
        for r, c in zip(*np.nonzero(self.inter)):
            a, b = self.pb.crops[int(self.pl[r])], self.gb.crops[int(self.gl[c])]
            self.tp_p[r, c] = _Boundaries.hits(a, b)
            self.tp_r[r, c] = _Boundaries.hits(b, a)
        self.pairs = self._match()

    @property
    def f(self) -> np.ndarray:
        if self.inter.size == 0:
            return np.zeros(self.inter.shape)
        return 2.0 * self.inter / (self.psz[:, None] + self.gsz[None, :])

    def _match(self) -> list:
        inter = self.inter
        if inter.size == 0 or not inter.any():
            return []
        n, m = inter.shape
        denom = self.psz[:, None] + self.gsz[None, :]
        scale = 1
        for d in np.unique(denom[inter > 0]):
            scale = math.lcm(scale, int(d))
        acc = Fraction(ACCURACY_F).limit_denominator(1000)
        k = min(n, m)
        base = k * (int(max(self.psz.sum(), self.gsz.sum())) + 1) + 1
        weights = []
        for r in range(n):
            row = []
            for c in range(m):
                a = int(inter[r, c])
                if a == 0:
                    row.append(0)
                    continue
                d = int(denom[r, c])
                w = 2 * a * (scale // d)
                for key in (a, int(self.tp_p[r, c]), int(self.tp_r[r, c])):
                    w = w * base + key
                # exact test of 2a / d >= ACCURACY_F
                w = w * (k + 1) + int(2 * a * acc.denominator >= acc.numerator * d)
                w = w * (2 * (n + m) * k + 1) + (2 * (n + m) - r - c)
                row.append(w)
            weights.append(row)
        return [(r, c) for r, c in _max_assignment(weights) if inter[r, c] > 0]

    def mapping(self) -> dict:
        return {int(self.pl[r]): int(self.gl[c]) for r, c in self.pairs}

    def overlap(self):
        hit = sum(int(self.inter[r, c]) for r, c in self.pairs)
        p = hit / self.psz.sum() if self.psz.sum() else 0.0
        r = hit / self.gsz.sum() if self.gsz.sum() else 0.0
        return float(p), float(r), float(_f(p, r))

    def boundary(self):
        tp_p = sum(int(self.tp_p[r, c]) for r, c in self.pairs)
        tp_r = sum(int(self.tp_r[r, c]) for r, c in self.pairs)
        n_p, n_g = sum(self.pb.sizes.values()), sum(self.gb.sizes.values())
        pr = tp_p / n_p if n_p else 0.0
        rc = tp_r / n_g if n_g else 0.0
        return float(pr), float(rc), float(_f(pr, rc))

    def accuracy(self, threshold: float = ACCURACY_F) -> float:
        if len(self.gl) == 0:
            raise NoGtObjects("ground truth has no objects")
        f = self.f
        return sum(f[r, c] >= threshold for r, c in self.pairs) / len(self.gl)


def pairwise_f(pred, gt):
    """Overlap F of every (pred label, gt label) pair plus the label lists."""
    pred, gt = _check(pred, gt)
    pl, gl, inter, psz, gsz = _table(pred, gt)
    f = 2.0 * inter / (psz[:, None] + gsz[None, :]) if inter.size else np.zeros(inter.shape)
    return pl, gl, f


def match_objects(pred, gt, tol_px: int = 1) -> dict:
    """Maximum total-F one-to-one matching of predicted to ground-truth labels.

    Matchings are ranked by total pairwise F, computed exactly. Ties go, in
    turn, to the larger total intersection, more boundary hits at
    ``tol_px``, more pairs reaching the accuracy threshold and finally to
    lower labels, so every reported score is independent of how the labels
    are numbered. Pairs with zero overlap are left unmatched.
    """
    return _Scoring(pred, gt, tol_px).mapping()


def matched_total_f(pred, gt) -> float:
    s = _Scoring(pred, gt)
    f = s.f
    return float(sum(f[r, c] for r, c in s.pairs))


def overlap_prf(pred, gt, tol_px: int = 1):
    """Matched overlap P/R/F; ``tol_px`` only settles ties in the matching."""
    return _Scoring(pred, gt, tol_px).overlap()


def boundary_prf(pred, gt, tol_px: int = 1):
    """Boundary P/R/F over matched pairs, with a Chebyshev tolerance of ``tol_px``.

    Precision counts predicted boundary pixels near the matched ground-truth
    boundary; recall counts ground-truth boundary pixels near the matched
    prediction's boundary.
    """
    return _Scoring(pred, gt, tol_px).boundary()


def object_accuracy(pred, gt, threshold: float = ACCURACY_F, tol_px: int = 1) -> float:
    """Fraction of ground-truth objects whose matched prediction reaches ``threshold`` F."""
    return _Scoring(pred, gt, tol_px).accuracy(threshold)


@dataclass(frozen=True)
class MetricsReport:
    overlap_p: float
    overlap_r: float
    overlap_f: float
    boundary_p: float
    boundary_r: float
    boundary_f: float
    object_accuracy: float
    n_gt_objects: int
    n_pred_objects: int

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate(pred, gt, tol_px: int = 1) -> MetricsReport:
    s = _Scoring(pred, gt, tol_px)
    return MetricsReport(*s.overlap(), *s.boundary(), s.accuracy(), len(s.gl), len(s.pl))
