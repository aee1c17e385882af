"""Pure numpy implementation of the numerical kernels.

This is the fallback backend used when the compiled extension is not
available (or when ``AFFDIM_BACKEND=python`` forces it). The function
surface mirrors ``affdim._core`` exactly; results agree with the compiled
backend to rounding error, and each backend is bit-reproducible on its own
for a fixed input.
"""
from __future__ import annotations

import numpy as np

from ._svf import log_svf_from_logsv

BACKEND_NAME = "python"

_CHUNK = 1 << 16


def _qr_pos(a: np.ndarray):
    """Thin QR with the sign convention that diag(R) >= 0."""
    q, r = np.linalg.qr(a)
    s = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    s = np.where(s == 0.0, 1.0, s)
    q = q * s[..., None, :]
    r = r * s[..., :, None]
    return q, r


def singular_values_batch(mats: np.ndarray) -> np.ndarray:
    """Singular values of a stack of (d, d) matrices, descending per row."""
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    return np.linalg.svd(mats, compute_uv=False)


def word_products_level(mats: np.ndarray, length: int) -> np.ndarray:
    """Products A_w for every word w of the given length, in lex order."""
    n_maps, d, _ = mats.shape
    prods = np.eye(d, dtype=np.float64)[None]
    for _ in range(length):
        prods = np.einsum("aij,bjk->abik", prods, mats).reshape(-1, d, d)
    return prods


def word_logsv_level(mats: np.ndarray, n: int) -> np.ndarray:
    """Log singular values of A_w for all N^n words w, lex order, (N^n, d).

    The caller is responsible for keeping N^n within budget. Products are
    composed from two half-level tables so memory stays at
    O(N^ceil(n/2) + chunk).
    """
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    n_maps, d, _ = mats.shape
    if n == 0:
        return np.zeros((1, d))
    l2 = n // 2
    l1 = n - l2
    tab_a = word_products_level(mats, l1)
    tab_b = word_products_level(mats, l2)
    total = n_maps**n
    nb = n_maps**l2
    out = np.empty((total, d))
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        prods = tab_a[idx // nb] @ tab_b[idx % nb]
        out[idx] = np.log(np.linalg.svd(prods, compute_uv=False))
    return out


def pressure_logsumexp(mats: np.ndarray, n: int, s: float) -> float:
    """log sum over all words of length n of phi^s(A_w).

    Streams over fixed-size lexicographic chunks and merges the per-chunk
    partial sums in chunk order, so the result does not depend on how the
    work is scheduled.
    """
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    n_maps, d, _ = mats.shape
    if n == 0:
        return 0.0
    l2 = n // 2
    l1 = n - l2
    tab_a = word_products_level(mats, l1)
    tab_b = word_products_level(mats, l2)
    total = n_maps**n
    nb = n_maps**l2
    partials = []
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        prods = tab_a[idx // nb] @ tab_b[idx % nb]
        logs = log_svf_from_logsv(np.log(np.linalg.svd(prods, compute_uv=False)), s)
        m = float(logs.max())
        partials.append((m, float(np.exp(logs - m).sum())))
    top = max(m for m, _ in partials)
    acc = 0.0
    comp = 0.0
    for m, sm in partials:
        term = sm * np.exp(m - top) - comp
        t = acc + term
        comp = (t - acc) - term
        acc = t
    return top + float(np.log(acc))


def qr_cocycle_batch(
    mats_t: np.ndarray, symbols: np.ndarray, burn_in: int, qr_every: int
) -> np.ndarray:
    """Accumulated log |diag R| of the QR-factorized cocycle, per trial.

    ``mats_t`` holds the transposed maps A_i^T; ``symbols`` is (trials,
    steps) with 0-based entries. The chain Y <- A_{sym}^T Y is
    re-factorized every ``qr_every`` steps (and at the burn-in boundary and
    the end); log-diagonals from the first ``burn_in`` steps are discarded.
    Returns (trials, d) sums over the remaining steps - burn_in steps.
    """
    mats_t = np.ascontiguousarray(mats_t, dtype=np.float64)
    symbols = np.ascontiguousarray(symbols, dtype=np.int64)
    trials, steps = symbols.shape
    d = mats_t.shape[1]
    if not burn_in < steps:
        raise ValueError(f"steps ({steps}) must exceed burn-in ({burn_in})")
    y = np.broadcast_to(np.eye(d), (trials, d, d)).copy()
    acc = np.zeros((trials, d))
    since = 0
    for m in range(steps):
        y = mats_t[symbols[:, m]] @ y
        since += 1
        boundary = m + 1 == burn_in
        due = m + 1 > burn_in and (m + 1 - burn_in) % qr_every == 0
        if boundary or due or m + 1 == steps:
            q, r = _qr_pos(y)
            diag = np.diagonal(r, axis1=-2, axis2=-1)
            if np.any(diag < 1e-300):
                raise ArithmeticError("cocycle re-normalization fault: collapsed diagonal")
            if m + 1 > burn_in:
                acc += np.log(diag)
            y = q
            since = 0
    return acc


def chain_qr_logs(mats: np.ndarray, symbols: np.ndarray, b0: np.ndarray):
    """Drive an orthonormal frame through gathered matrices, one QR per step.

    Applies Y <- mats[sym] @ Y starting from the (d, k) frame ``b0``,
    re-orthonormalizing every step. Returns (logs, bases): per-step
    log |diag R| of shape (steps, k), and the orthonormal frames of shape
    (steps + 1, d, k) including the start.
    """
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    symbols = np.ascontiguousarray(symbols, dtype=np.int64)
    b = np.array(b0, dtype=np.float64)
    d, k = b.shape
    steps = symbols.shape[0]
    logs = np.empty((steps, k))
    bases = np.empty((steps + 1, d, k))
    bases[0] = b
    for m in range(steps):
        z = mats[symbols[m]] @ b
        q, r = _qr_pos(z)
        diag = np.diagonal(r)
        if np.any(diag < 1e-300):
            raise ArithmeticError("frame re-normalization fault: collapsed diagonal")
        logs[m] = np.log(diag)
        b = q
        bases[m + 1] = b
    return logs, bases


def project_words_batch(mats: np.ndarray, trans: np.ndarray, symbols: np.ndarray) -> np.ndarray:
    """Truncated natural projection of each symbol row, (m, d) points.

    Row w of ``symbols`` (0-based, length L) maps to
    sum_{k=1..L} A_{w|k-1} v_{w_k}.
    """
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    trans = np.ascontiguousarray(trans, dtype=np.float64)
    symbols = np.ascontiguousarray(symbols, dtype=np.int64)
    m, depth = symbols.shape
    d = mats.shape[1]
    pts = np.zeros((m, d))
    prod = np.broadcast_to(np.eye(d), (m, d, d)).copy()
    for k in range(depth):
        sym = symbols[:, k]
        pts += (prod @ trans[sym][..., None])[..., 0]
        if k + 1 < depth:
            prod = prod @ mats[sym]
    return pts
