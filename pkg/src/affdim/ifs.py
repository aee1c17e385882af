"""The affine IFS data model and its checkable membership conditions.

An affine iterated function system is a tuple of invertible linear maps
plus translations, x -> A_i x + v_i. This module holds the natural
projection from symbol sequences to points, the open-condition membership
margin (planar threshold sqrt(2)/2, higher-dimensional threshold
2/sqrt(3) - 1), the strong-separation certificate derived from it, and
conjugation by an invertible change of coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from ._backend import kernels
from .linalg import singular_values_batch
from .words import Word, validate_word

PLANAR_THRESHOLD = math.sqrt(2.0) / 2.0
HIGHER_DIM_THRESHOLD = 2.0 / math.sqrt(3.0) - 1.0
DUPLICATE_RTOL = 1e-12


@dataclass(frozen=True)
class AffineIFS:
    """Matrix tuple, translation tuple, and optional branch probabilities.

    Matrices must be invertible; contractivity is validated by the
    operations that need it, not at construction.
    """

    matrices: np.ndarray  # (N, d, d)
    translations: np.ndarray  # (N, d)
    weights: Optional[np.ndarray] = None  # (N,), positive, sums to 1

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=np.float64)
        trans = np.asarray(self.translations, dtype=np.float64)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError(f"matrices must be (N, d, d), got {mats.shape}")
        n, d, _ = mats.shape
        if n < 2:
            raise ValueError(f"need at least 2 maps, got {n}")
        if trans.shape != (n, d):
            raise ValueError(f"translations must be ({n}, {d}), got {trans.shape}")
        if not (np.all(np.isfinite(mats)) and np.all(np.isfinite(trans))):
            raise ValueError("matrices/translations contain non-finite entries")
        sv = singular_values_batch(mats)
        if np.any(sv[:, -1] <= 0.0):
            raise ValueError("all matrices must be invertible")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "translations", trans)
        object.__setattr__(self, "_singular_values", sv)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (n,):
                raise ValueError(f"weights must have shape ({n},), got {w.shape}")
            if np.any(w <= 0.0) or abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("weights must be positive and sum to 1 within 1e-12")
            object.__setattr__(self, "weights", w)

    @property
    def n_maps(self) -> int:
        return self.matrices.shape[0]

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    @property
    def map_norms(self) -> np.ndarray:
        """Operator norm of each matrix."""
        return self._singular_values[:, 0]

    @property
    def map_mininorms(self) -> np.ndarray:
        return self._singular_values[:, -1]

    @property
    def norm(self) -> float:
        """max_i ||A_i||."""
        return float(self.map_norms.max())

    @property
    def mininorm(self) -> float:
        """min_i of the smallest singular value."""
        return float(self.map_mininorms.min())

    @property
    def translation_norm(self) -> float:
        """max_i |v_i|."""
        if self.n_maps == 0:
            return 0.0
        return float(np.linalg.norm(self.translations, axis=1).max())

    @property
    def is_contractive(self) -> bool:
        return self.norm < 1.0

    def require_contractive(self):
        if not self.is_contractive:
            raise ValueError(f"system is not contractive: max map norm is {self.norm}")

    @property
    def radius(self) -> float:
        """Radius of the invariant ball centered at the origin."""
        self.require_contractive()
        return self.translation_norm / (1.0 - self.norm)

    def apply(self, i: int, x) -> np.ndarray:
        """Image of x under map i (1-based)."""
        return self.matrices[i - 1] @ np.asarray(x, dtype=np.float64) + self.translations[i - 1]

    def effective_weights(self) -> np.ndarray:
        if self.weights is not None:
            return self.weights
        return np.full(self.n_maps, 1.0 / self.n_maps)


@dataclass(frozen=True)
class ConditionReport:
    """Margins and certificates for the explicit matrix-tuple conditions."""

    membership_margin: float
    threshold_used: float
    evaluated_max: float
    ssc_gap: float
    contractive: bool
    duplicates: Tuple[Tuple[int, int], ...]

    @property
    def is_member(self) -> bool:
        return self.membership_margin > 0.0 and not self.duplicates


def natural_projection(ifs: AffineIFS, word: Iterable[int], tol: float = 1e-12) -> np.ndarray:
    """Point coded by a word: sum_k A_{w|k-1} v_{w_k}, truncated to accuracy tol.

    The partial sum stops at n* = min(len(w), ceil(log(tol (1-|A|)/|v|) /
    log |A|)); the discarded tail is bounded by |A|^{n*} |v| / (1-|A|).
    """
    ifs.require_contractive()
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    w = validate_word(word, ifs.n_maps)
    if len(w) == 0:
        raise ValueError("word must be nonempty")
    vnorm = ifs.translation_norm
    if vnorm == 0.0:
        return np.zeros(ifs.dim)
    a = ifs.norm
    cut = math.ceil(math.log(tol * (1.0 - a) / vnorm) / math.log(a)) if tol * (1.0 - a) < vnorm else 0
    n_star = min(len(w), max(cut, 0))
    if n_star == 0:
        return np.zeros(ifs.dim)
    symbols = np.asarray(w[:n_star], dtype=np.int64) - 1
    return kernels.project_words_batch(ifs.matrices, ifs.translations, symbols[None])[0]


def _duplicate_pairs(ifs: AffineIFS) -> Tuple[Tuple[int, int], ...]:
    scale = max(1.0, ifs.translation_norm)
    out = []
    for i in range(ifs.n_maps):
        for j in range(i + 1, ifs.n_maps):
            if np.linalg.norm(ifs.translations[i] - ifs.translations[j]) < DUPLICATE_RTOL * scale:
                out.append((i + 1, j + 1))
    return tuple(out)


def membership_threshold(d: int) -> float:
    if d < 2:
        raise ValueError("membership conditions are defined for dimension >= 2 only")
    return PLANAR_THRESHOLD if d == 2 else HIGHER_DIM_THRESHOLD


def membership_margin(ifs: AffineIFS) -> ConditionReport:
    """Margin of the open membership condition, threshold minus the evaluated max.

    Evaluates M = max_{i != j} (||A_i|| + ||A_j||) / |v_i - v_j| * |v|/(1-|A|)
    against sqrt(2)/2 in the plane and 2/sqrt(3)-1 for d >= 3. Requires
    pairwise distinct translations and a contractive tuple; M > 0 is
    automatic for invertible matrices but checked anyway.
    """
    threshold = membership_threshold(ifs.dim)
    duplicates = _duplicate_pairs(ifs)
    if duplicates:
        raise ValueError(f"duplicate translations make the margin undefined: {duplicates}")
    ifs.require_contractive()
    norms = ifs.map_norms
    m = 0.0
    for i in range(ifs.n_maps):
        for j in range(i + 1, ifs.n_maps):
            gap = np.linalg.norm(ifs.translations[i] - ifs.translations[j])
            m = max(m, (norms[i] + norms[j]) / gap)
    m *= ifs.translation_norm / (1.0 - ifs.norm)
    if not m > 0.0:
        raise ValueError("evaluated maximum is not strictly positive")
    return ConditionReport(
        membership_margin=threshold - m,
        threshold_used=threshold,
        evaluated_max=m,
        ssc_gap=ssc_certificate(ifs),
        contractive=True,
        duplicates=duplicates,
    )


def ssc_certificate(ifs: AffineIFS) -> float:
    """Strong-separation gap: min_{i != j} |v_i - v_j| - (||A_i||+||A_j||) R.

    Here R = |v|/(1-|A|) bounds every projected point. A positive value
    certifies that first-level images are disjoint for every orthogonal
    rotation of the translations, hence the strong separation condition.
    """
    ifs.require_contractive()
    r = ifs.radius
    norms = ifs.map_norms
    gap = math.inf
    for i in range(ifs.n_maps):
        for j in range(i + 1, ifs.n_maps):
            dist = np.linalg.norm(ifs.translations[i] - ifs.translations[j])
            gap = min(gap, dist - (norms[i] + norms[j]) * r)
    return float(gap)


def conjugate(ifs: AffineIFS, u) -> AffineIFS:
    """Conjugated system (u^-1 A_i u, v_i).

    Together with :func:`transform_translations` this realizes the
    equivalence pi_{u(A),v}(w) = u^-1 pi_{A,u(v)}(w) for every word.
    """
    u = np.asarray(u, dtype=np.float64)
    d = ifs.dim
    if u.shape != (d, d):
        raise ValueError(f"conjugator must be ({d}, {d}), got {u.shape}")
    if abs(np.linalg.det(u)) < 1e-14:
        raise ValueError("conjugator must be invertible")
    u_inv = np.linalg.inv(u)
    mats = np.einsum("ij,njk,kl->nil", u_inv, ifs.matrices, u)
    return AffineIFS(matrices=mats, translations=ifs.translations.copy(), weights=ifs.weights)


def transform_translations(ifs: AffineIFS, u) -> AffineIFS:
    """Companion system (A_i, u v_i) for an invertible u."""
    u = np.asarray(u, dtype=np.float64)
    d = ifs.dim
    if u.shape != (d, d):
        raise ValueError(f"transform must be ({d}, {d}), got {u.shape}")
    if abs(np.linalg.det(u)) < 1e-14:
        raise ValueError("transform must be invertible")
    return AffineIFS(
        matrices=ifs.matrices.copy(),
        translations=ifs.translations @ u.T,
        weights=ifs.weights,
    )
