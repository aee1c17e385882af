"""Dense linear algebra for small ambient dimension.

Singular values, compound (exterior power) matrices, orthogonal
projections onto subspaces, and Haar-distributed orthogonal matrices.
Everything here is a pure function of its inputs; the singular value
kernel is backend-selected (compiled or numpy).
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from ._backend import kernels

NEAR_SINGULAR_RTOL = 1e-14
ORTHONORMAL_TOL = 1e-12


def _as_square(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class SingularSpectrum:
    """Singular values in nonincreasing order."""

    values: np.ndarray

    @property
    def norm(self) -> float:
        """Operator norm, the largest singular value."""
        return float(self.values[0])

    @property
    def mininorm(self) -> float:
        """Smallest singular value, equal to 1/||A^-1||."""
        return float(self.values[-1])

    @property
    def near_singular(self) -> bool:
        """True when the matrix is singular to working precision."""
        return self.values[-1] < NEAR_SINGULAR_RTOL * self.values[0]

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def singular_values(a) -> SingularSpectrum:
    """Singular values of a real square matrix, largest first."""
    a = _as_square(a)
    vals = kernels.singular_values_batch(a[None])[0]
    return SingularSpectrum(values=vals)


def singular_values_batch(mats) -> np.ndarray:
    """Singular values for a stack of (d, d) matrices; (m, d), descending rows."""
    mats = np.asarray(mats, dtype=np.float64)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError(f"expected a (m, d, d) stack, got shape {mats.shape}")
    if not np.all(np.isfinite(mats)):
        raise ValueError("matrix stack contains non-finite entries")
    return kernels.singular_values_batch(mats)


def compound(a, k: int) -> np.ndarray:
    """k-th compound matrix: minors over lexicographically ordered k-subsets.

    Rows and columns are indexed by the k-subsets of {0..d-1} in
    lexicographic order; entry (I, J) is det A[I, J]. Satisfies
    (AB)^(k) = A^(k) B^(k) and ||A^(k)|| = alpha_1(A) ... alpha_k(A).
    """
    a = _as_square(a)
    d = a.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"compound order k must satisfy 1 <= k <= {d}, got {k}")
    if k == 1:
        return a.copy()
    subsets = list(combinations(range(d), k))
    m = comb(d, k)
    blocks = np.empty((m, m, k, k))
    for i, rows in enumerate(subsets):
        for j, cols in enumerate(subsets):
            blocks[i, j] = a[np.ix_(rows, cols)]
    return np.linalg.det(blocks.reshape(m * m, k, k)).reshape(m, m)


def haar_orthogonal(d: int, rng) -> np.ndarray:
    """Haar-distributed orthogonal matrix from a seeded generator.

    QR of an iid standard normal matrix, with the triangular factor's
    diagonal forced positive so the draw is a pure function of the
    generator state.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    rng = as_generator(rng)
    g = rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    s = np.sign(np.diag(r))
    s[s == 0.0] = 1.0
    return q * s


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, a seed, or None (fresh entropy)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class Subspace:
    """A k-plane given by k orthonormal basis rows of length d."""

    basis: np.ndarray  # (k, d), orthonormal rows

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.float64)
        if b.ndim != 2:
            raise ValueError(f"basis must be (k, d), got shape {b.shape}")
        k, d = b.shape
        if not 1 <= k <= d:
            raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
        gram = b @ b.T
        if np.max(np.abs(gram - np.eye(k))) > ORTHONORMAL_TOL:
            raise ValueError("basis rows are not orthonormal to 1e-12")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim_ambient(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        """Orthogonal projection matrix onto the subspace, (d, d)."""
        return self.basis.T @ self.basis

    def complement(self) -> "Subspace":
        """The orthogonal complement as a Subspace of dimension d - k."""
        k, d = self.basis.shape
        if k == d:
            raise ValueError("full space has no proper complement")
        # null space of the basis rows
        _, _, vt = np.linalg.svd(self.basis)
        return Subspace(basis=vt[k:])

    @classmethod
    def span(cls, vectors) -> "Subspace":
        """Orthonormalize the given row vectors (must be independent)."""
        v = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
        q, r = np.linalg.qr(v.T)
        if np.min(np.abs(np.diag(r))) < 1e-12 * max(1.0, np.abs(r).max()):
            raise ValueError("vectors are not linearly independent")
        s = np.sign(np.diag(r))
        s[s == 0.0] = 1.0
        return cls(basis=(q * s).T)

    @classmethod
    def random(cls, d: int, k: int, rng) -> "Subspace":
        """Haar-random k-plane in R^d."""
        g = haar_orthogonal(d, rng)
        return cls(basis=g[:, :k].T)

    @classmethod
    def coordinate(cls, d: int, axes) -> "Subspace":
        """Span of the given coordinate axes (0-based)."""
        axes = list(axes)
        b = np.zeros((len(axes), d))
        for i, ax in enumerate(axes):
            b[i, ax] = 1.0
        return cls(basis=b)


def projected_singular_values(v: Subspace, a) -> np.ndarray:
    """Top dim(V) singular values of P_V A; the rest are exactly zero.

    Computed from the full (d, d) product of the projector with A; the
    trailing d - dim(V) values are asserted to vanish.
    """
    a = _as_square(a)
    if a.shape[0] != v.dim_ambient:
        raise ValueError(
            f"matrix dimension {a.shape[0]} does not match ambient dimension {v.dim_ambient}"
        )
    vals = kernels.singular_values_batch((v.projector @ a)[None])[0]
    k = v.dim
    tail = vals[k:]
    if tail.size and tail.max() > 1e-10 * max(1.0, vals[0]):
        raise AssertionError("projection onto a k-plane left more than k singular values")
    return vals[:k]
