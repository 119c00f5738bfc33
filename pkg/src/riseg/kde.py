"""Product-Gaussian kernel density estimates and the same-body posterior."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit, logsumexp

from .errors import ClassStarvation, FormatError

KDE_MAGIC = b"RISKDE1\x00"
_FORMAT_VERSION = 1
_UNDERFLOW = 1e-300


def silverman_bandwidth(samples: np.ndarray, floor: float = 1e-4) -> np.ndarray:
    """Per-dimension Silverman bandwidth for a product kernel, floored at ``floor``."""
    x = np.asarray(samples, dtype=float)
    n, d = x.shape
    sigma = x.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    h = sigma * (4.0 / ((d + 2.0) * n)) ** (1.0 / (d + 4.0))
    return np.maximum(h, floor)


def _canonical_subsample(x: np.ndarray, cap: int) -> np.ndarray:
    """Sort rows lexicographically and keep ``cap`` evenly spaced ones.

    Sorting first makes the result independent of the input row order.
    """
    x = x[np.lexsort(x.T[::-1])]
    if cap and len(x) > cap:
        x = x[np.linspace(0, len(x) - 1, cap).round().astype(int)]
    return x


@dataclass(frozen=True, eq=False)
class GaussianKDE:
    """Gaussian product-kernel density with fixed per-dimension bandwidths."""

    samples: np.ndarray
    bandwidth: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 2 or len(x) == 0:
            raise ValueError("samples must be a non-empty (n, d) array")
        h = np.broadcast_to(np.asarray(self.bandwidth, dtype=float), (x.shape[1],)).copy()
        if not np.all(h > 0):
            raise ValueError("bandwidths must be positive")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "bandwidth", h)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def log_pdf(self, y, chunk: int = 1024) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        x = self.samples / self.bandwidth
        xx = np.sum(x * x, axis=1)
        norm = -np.log(len(x)) - np.sum(np.log(self.bandwidth)) - 0.5 * self.dim * np.log(2 * np.pi)
        out = np.empty(len(y))
        for s in range(0, len(y), chunk):
            z = y[s : s + chunk] / self.bandwidth
            d2 = np.maximum(np.sum(z * z, axis=1)[:, None] + xx[None, :] - 2.0 * z @ x.T, 0.0)
            out[s : s + chunk] = logsumexp(-0.5 * d2, axis=1) + norm
        return out

    def pdf(self, y) -> np.ndarray:
        return np.exp(self.log_pdf(y))


@dataclass(frozen=True, eq=False)
class GroupingModel:
    """Class-conditional densities of pair features plus the same-body prior."""

    kde_same: GaussianKDE
    kde_diff: GaussianKDE
    prior_same: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.prior_same < 1.0:
            raise ValueError("prior_same must lie in (0, 1)")
        if self.kde_same.dim != self.kde_diff.dim:
            raise ValueError("class densities disagree on feature dimension")

    @property
    def dim(self) -> int:
        return self.kde_same.dim

    @property
    def bandwidths(self):
        return self.kde_same.bandwidth, self.kde_diff.bandwidth


@dataclass(frozen=True)
class KdeConfig:
    """Bandwidth settings. ``None`` bandwidths mean Silverman's rule."""

    bandwidth_same: tuple | None = None
    bandwidth_diff: tuple | None = None
    bandwidth_floor: float = 1e-4
    max_samples: int = 3000
    min_pairs: int = 50


def fit_grouping_model(same, diff, config: KdeConfig | None = None, metadata: dict | None = None) -> GroupingModel:
    """Fit both class densities from labelled pair features.

    Parameters
    ----------
    same, diff : array_like, shape (n, d)
        Features of same-body and different-body pairs.
    """
    cfg = config or KdeConfig()
    same = np.atleast_2d(np.asarray(same, dtype=float))
    diff = np.atleast_2d(np.asarray(diff, dtype=float))
    if len(same) < cfg.min_pairs or len(diff) < cfg.min_pairs:
        raise ClassStarvation(f"need {cfg.min_pairs} pairs per class, got {len(same)} same / {len(diff)} different")
    prior = len(same) / (len(same) + len(diff))
    same_c = _canonical_subsample(same, cfg.max_samples)
    diff_c = _canonical_subsample(diff, cfg.max_samples)
    h_same = np.asarray(cfg.bandwidth_same, float) if cfg.bandwidth_same else silverman_bandwidth(same_c, cfg.bandwidth_floor)
    h_diff = np.asarray(cfg.bandwidth_diff, float) if cfg.bandwidth_diff else silverman_bandwidth(diff_c, cfg.bandwidth_floor)
    meta = dict(metadata or {})
    meta.update(n_same=len(same), n_diff=len(diff))
    return GroupingModel(GaussianKDE(same_c, h_same), GaussianKDE(diff_c, h_diff), prior, meta)


def posterior_same(model: GroupingModel, y) -> np.ndarray | float:
    """Probability that pairs with features ``y`` lie on one rigid body.

    Falls back to the prior where both class densities underflow.
    """
    arr = np.asarray(y, dtype=float)
    scalar = arr.ndim == 1
    arr = np.atleast_2d(arr)
    ls = model.kde_same.log_pdf(arr)
    ld = model.kde_diff.log_pdf(arr)
    logit = ls - ld + np.log(model.prior_same) - np.log1p(-model.prior_same)
    p = expit(logit)
    p = np.where(np.maximum(ls, ld) < np.log(_UNDERFLOW), model.prior_same, p)
    p = np.clip(p, 0.0, 1.0)
    return float(p[0]) if scalar else p


def save_model(path, model: GroupingModel) -> None:
    """Binary layout: magic, version, header JSON, then float64 sample arrays."""
    arrays = [model.kde_same.samples, model.kde_diff.samples]
    header = {
        "version": _FORMAT_VERSION,
        "dim": model.dim,
        "n_same": len(arrays[0]),
        "n_diff": len(arrays[1]),
        "bandwidth_same": model.kde_same.bandwidth.tolist(),
        "bandwidth_diff": model.kde_diff.bandwidth.tolist(),
        "prior_same": model.prior_same,
        "metadata": model.metadata,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    payload = b"".join(a.astype("<f8").tobytes() for a in arrays)
    Path(path).write_bytes(KDE_MAGIC + struct.pack("<I", len(blob)) + blob + payload)


def load_model(path) -> GroupingModel:
    data = Path(path).read_bytes()
    if data[:8] != KDE_MAGIC:
        raise FormatError("bad grouping-model magic")
    (hlen,) = struct.unpack("<I", data[8:12])
    try:
        header = json.loads(data[12 : 12 + hlen])
    except ValueError as exc:
        raise FormatError("corrupt grouping-model header") from exc
    if header.get("version") != _FORMAT_VERSION:
        raise FormatError(f"unsupported grouping-model version {header.get('version')}")
    d, ns, nd = header["dim"], header["n_same"], header["n_diff"]
    off = 12 + hlen
    if len(data) != off + 8 * d * (ns + nd):
        raise FormatError("grouping-model payload has the wrong size")
    same = np.frombuffer(data, "<f8", ns * d, off).reshape(ns, d)
    diff = np.frombuffer(data, "<f8", nd * d, off + 8 * ns * d).reshape(nd, d)
    return GroupingModel(
        GaussianKDE(same.astype(float), header["bandwidth_same"]),
        GaussianKDE(diff.astype(float), header["bandwidth_diff"]),
        float(header["prior_same"]),
        header["metadata"],
    )
