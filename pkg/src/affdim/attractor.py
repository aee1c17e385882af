"""Point-cloud generation, box counting, and measure-dimension proxies.

Clouds come either from one truncated projection per cylinder at a fixed
depth (exhaustive) or from seeded chaos-game sampling of the stationary
measure. Box counts use an origin-anchored grid with floor binning; the
dimension fit runs over a window that excludes scales finer than the
sampling resolution and coarser than a quarter of the attractor radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from ._backend import kernels
from .errors import BudgetError, FitWindowError
from .ifs import AffineIFS
from .linalg import as_generator

DEFAULT_POINT_BUDGET = 2**24
_CHUNK = 1 << 16
MIN_FIT_SCALES = 4
NN_WINDOW_FACTOR = 10.0
COARSE_WINDOW_DIVISOR = 4.0


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # (m, d)
    weights: Optional[np.ndarray] = None  # per-point masses summing to 1

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError(f"points must be (m, d), got shape {pts.shape}")
        object.__setattr__(self, "points", pts)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (pts.shape[0],) or abs(w.sum() - 1.0) > 1e-9:
                raise ValueError("weights must be one per point and sum to 1")
            object.__setattr__(self, "weights", w)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def generate_exhaustive(
    ifs: AffineIFS, depth: int, *, budget: int = DEFAULT_POINT_BUDGET
) -> PointCloud:
    """One truncated projection per length-``depth`` word, in lex order.

    Each point sits within |A|^depth * radius of the cylinder it codes.
    """
    ifs.require_contractive()
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    total = ifs.n_maps**depth
    if total > budget:
        raise BudgetError(f"{ifs.n_maps}**{depth} points exceed the {budget} budget")
    if depth == 0:
        return PointCloud(points=np.zeros((1, ifs.dim)))
    points = np.empty((total, ifs.dim))
    powers = ifs.n_maps ** np.arange(depth - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        symbols = (idx[:, None] // powers[None, :]) % ifs.n_maps
        points[idx] = kernels.project_words_batch(ifs.matrices, ifs.translations, symbols)
    return PointCloud(points=points)


def generate_random(
    ifs: AffineIFS, count: int, depth: int, rng=None
) -> PointCloud:
    """Seeded chaos-game cloud: iid words from the branch probabilities
    (uniform when absent), truncated at ``depth``."""
    ifs.require_contractive()
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    gen = as_generator(rng)
    cdf = np.cumsum(ifs.effective_weights())
    points = np.empty((count, ifs.dim))
    for start in range(0, count, _CHUNK):
        stop = min(start + _CHUNK, count)
        u = gen.random((stop - start, depth))
        symbols = np.searchsorted(cdf, u, side="right").astype(np.int64)
        points[start:stop] = kernels.project_words_batch(ifs.matrices, ifs.translations, symbols)
    return PointCloud(points=points)


@dataclass(frozen=True)
class BoxCountCurve:
    scales: np.ndarray  # decreasing box sides
    counts: np.ndarray  # occupied boxes per scale
    fit_window: Tuple[int, int]  # [lo, hi) index range used for the fit
    slope: float  # fitted d log N / d log(1/delta)
    r2: float


def _count_boxes(points: np.ndarray, delta: float, anchor: float = 0.0) -> int:
    keys = np.floor((points - anchor) / delta).astype(np.int64)
    keys = np.ascontiguousarray(keys)
    view = keys.view([("", keys.dtype)] * keys.shape[1]).ravel()
    return int(np.unique(view).size)


def median_nn_spacing(points: np.ndarray, cap: int = 1 << 17) -> float:
    """Median nearest-neighbor distance, query-subsampled for large clouds."""
    tree = cKDTree(points)
    stride = max(1, points.shape[0] // cap)
    query = points[::stride][:cap]
    dist, _ = tree.query(query, k=2)
    return float(np.median(dist[:, 1]))


def _fit_loglog(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def box_dimension(
    cloud: PointCloud,
    scales: Optional[Sequence[float]] = None,
    *,
    radius: Optional[float] = None,
    anchor: float = 0.0,
    max_levels: int = 30,
) -> BoxCountCurve:
    """Box-counting slope over an origin-anchored dyadic scale ladder.

    The fit window keeps scales in [10 * median NN spacing, R/4]; fewer
    than four usable scales raise :class:`FitWindowError`.
    """
    pts = cloud.points
    if cloud.count < 1000:
        raise ValueError(f"need at least 1000 points, got {cloud.count}")
    r = radius if radius is not None else float(np.linalg.norm(pts, axis=1).max())
    if r <= 0.0:
        r = 1.0
    if scales is None:
        scale_arr = r * 2.0 ** -np.arange(1, max_levels + 1, dtype=np.float64)
    else:
        scale_arr = np.asarray(sorted((float(s) for s in scales), reverse=True))
        if np.any(scale_arr <= 0) or len(scale_arr) != len(set(scale_arr)):
            raise ValueError("scales must be positive, distinct, decreasing")
    nn = median_nn_spacing(pts)
    lo_cut = NN_WINDOW_FACTOR * nn
    hi_cut = r / COARSE_WINDOW_DIVISOR
    usable = (scale_arr >= lo_cut) & (scale_arr <= hi_cut)
    if usable.sum() < MIN_FIT_SCALES:
        raise FitWindowError(
            f"only {int(usable.sum())} scales inside [{lo_cut:.3g}, {hi_cut:.3g}]; "
            f"need {MIN_FIT_SCALES}"
        )
    idx = np.flatnonzero(usable)
    window = (int(idx[0]), int(idx[-1]) + 1)
    scale_arr = scale_arr[usable]
    counts = np.array([_count_boxes(pts, float(s), anchor) for s in scale_arr])
    slope, r2 = _fit_loglog(np.log(1.0 / scale_arr), np.log(counts))
    return BoxCountCurve(scales=scale_arr, counts=counts, fit_window=window, slope=slope, r2=r2)


@dataclass(frozen=True)
class CorrelationCurve:
    radii: np.ndarray
    correlation: np.ndarray  # fraction of point pairs within each radius
    fit_window: Tuple[int, int]
    slope: float
    r2: float
    proxy: bool = True  # correlation dimension stands in for the measure dimension


def correlation_dimension(
    cloud: PointCloud,
    radii: Optional[Sequence[float]] = None,
    *,
    subsample: int = 20_000,
    min_pairs: int = 100,
) -> CorrelationCurve:
    """Correlation integral slope, a low-variance measure-dimension proxy.

    Pairwise distances are computed on an evenly strided subsample of at
    most ``subsample`` points.
    """
    pts = cloud.points
    if cloud.count < 10_000:
        raise ValueError(f"need at least 10000 points, got {cloud.count}")
    if cloud.count > subsample:
        stride = max(1, cloud.count // subsample)
        pts = pts[::stride][:subsample]
    m = pts.shape[0]
    r_max = float(np.linalg.norm(pts, axis=1).max())
    if r_max <= 0.0:
        r_max = 1.0
    if radii is None:
        nn = median_nn_spacing(pts)
        lo = max(2.0 * nn, 1e-12 * r_max)
        hi = r_max / 2.0
        if lo >= hi:
            lo = hi / 256.0
        r_arr = np.geomspace(lo, hi, 24)
    else:
        r_arr = np.asarray(sorted(float(x) for x in radii))
        if np.any(r_arr <= 0):
            raise ValueError("radii must be positive")

    total_pairs = m * (m - 1) // 2
    counts = np.zeros(len(r_arr), dtype=np.int64)
    block = 256
    for start in range(0, m - 1, block):
        stop = min(start + block, m - 1)
        rows = pts[start:stop]
        dists = np.linalg.norm(rows[:, None, :] - pts[None, start:, :], axis=2)
        local = np.triu_indices(stop - start, k=1, m=m - start)
        flat = dists[local]
        # a pair at distance x lands in every radius bin >= its insertion point
        bins = np.searchsorted(r_arr, flat, side="left")
        hist = np.bincount(bins, minlength=len(r_arr) + 1)[: len(r_arr)]
        counts += np.cumsum(hist)
    corr = counts / total_pairs

    usable = counts >= min_pairs
    trimmed = usable & (corr <= 0.5)
    if trimmed.sum() >= MIN_FIT_SCALES:
        usable = trimmed
    if usable.sum() < MIN_FIT_SCALES:
        raise FitWindowError(
            f"only {int(usable.sum())} radii carry at least {min_pairs} pairs"
        )
    idx = np.flatnonzero(usable)
    window = (int(idx[0]), int(idx[-1]) + 1)
    x = np.log(r_arr[usable])
    y = np.log(corr[usable])
    slope, r2 = _fit_loglog(x, y)
    return CorrelationCurve(
        radii=r_arr, correlation=corr, fit_window=window, slope=slope, r2=r2
    )


def save_csv(cloud: PointCloud, path: str):
    """One row per point, 17 significant digits, optional trailing weight."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for i in range(cloud.count):
            row = [format(x, ".17g") for x in cloud.points[i]]
            if cloud.weights is not None:
                row.append(format(cloud.weights[i], ".17g"))
            fh.write(",".join(row) + "\n")


def save_ppm(cloud: PointCloud, path: str, resolution: int = 1024, radius: Optional[float] = None):
    """Binary PPM (P6) raster: white background, black points, top-left origin.

    The frame is the square [-R, R]^2 (points on a line for d = 1).
    """
    if cloud.dim not in (1, 2):
        raise ValueError(f"rendering supports d in (1, 2), got d = {cloud.dim}")
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    pts = cloud.points
    if cloud.dim == 1:
        pts = np.concatenate([pts, np.zeros_like(pts)], axis=1)
    r = radius if radius is not None else float(np.abs(pts).max())
    if r <= 0.0:
        r = 1.0
    cols = np.clip(((pts[:, 0] + r) / (2.0 * r) * resolution).astype(np.int64), 0, resolution - 1)
    rows = np.clip(((r - pts[:, 1]) / (2.0 * r) * resolution).astype(np.int64), 0, resolution - 1)
    image = np.full((resolution, resolution), 255, dtype=np.uint8)
    image[rows, cols] = 0
    with open(path, "wb") as fh:
        fh.write(f"P6\n{resolution} {resolution}\n255\n".encode("ascii"))
        fh.write(np.repeat(image[:, :, None], 3, axis=2).tobytes())
