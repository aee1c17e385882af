"""Lyapunov exponents of matrix cocycles and derived classifications.

Exponents are estimated by the discrete QR method: multiply transposed
maps along a sampled word, re-factorize into orthogonal times triangular
on a fixed cadence, and average the accumulated log-diagonals over
independent trials. Also here: the Lyapunov dimension formula, the
dominated-splitting classifier over singular value ratios, and the
eigenvalue witness search used to certify simple spectra in the plane.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ._backend import kernels
from .errors import BudgetError
from .ifs import AffineIFS
from .linalg import as_generator
from .words import StepMeasure, Word, enumerate_words, word_product

QR_CADENCE = 8
BURN_IN = 100


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Estimated exponents 0 < chi_1 <= ... <= chi_d with standard errors."""

    chi: np.ndarray  # (d,), ascending, nats per original symbol
    stderr: np.ndarray  # (d,), across-trial standard error
    steps: int  # symbols consumed per trial
    trials: int

    @property
    def dim(self) -> int:
        return len(self.chi)

    def sum_chi(self) -> float:
        return float(self.chi.sum())


def exponents_mc(
    ifs: AffineIFS,
    measure: Optional[StepMeasure] = None,
    steps: int = 100_000,
    trials: int = 8,
    rng=None,
    *,
    qr_every: int = QR_CADENCE,
    burn_in: int = BURN_IN,
    threads: int = 1,
) -> LyapunovSpectrum:
    """Monte-Carlo Lyapunov exponents under a (step-n) Bernoulli measure.

    Symbols are drawn in one batch from the seeded generator, so the
    result is deterministic for a fixed (seed, steps, trials) regardless
    of the worker count. The first ``burn_in`` symbols of every trial are
    discarded before accumulation. Exponents are reported per original
    symbol, so step-n driving measures are directly comparable to step-1.
    """
    ifs.require_contractive()
    if steps < 100:
        raise ValueError(f"need steps >= 100, got {steps}")
    if trials < 2:
        raise ValueError(f"need trials >= 2 for a standard error, got {trials}")
    if measure is None:
        measure = StepMeasure.bernoulli(ifs.effective_weights())
    if measure.n_branches_lower_bound > ifs.n_maps:
        raise ValueError("measure support uses symbols beyond the system's branch count")
    gen = as_generator(rng)
    block = measure.block_length
    blocks = -(-steps // block)
    actual_steps = blocks * block
    if actual_steps <= burn_in:
        raise ValueError(f"steps ({actual_steps}) must exceed burn-in ({burn_in})")

    # one batched draw: (trials, blocks) support indices -> symbol streams
    u = gen.random((trials, blocks))
    idx = np.searchsorted(measure._cdf, u, side="right")
    table = np.asarray([w for w in measure.support], dtype=np.int64) - 1
    symbols = table[idx].reshape(trials, actual_steps)

    mats_t = np.ascontiguousarray(ifs.matrices.transpose(0, 2, 1))
    if threads > 1 and trials > 1:
        slices = np.array_split(np.arange(trials), min(threads, trials))
        acc = np.empty((trials, ifs.dim))
        with ThreadPoolExecutor(max_workers=len(slices)) as pool:
            futs = [
                (sl, pool.submit(kernels.qr_cocycle_batch, mats_t, symbols[sl], burn_in, qr_every))
                for sl in slices
                if len(sl)
            ]
            for sl, fut in futs:
                acc[sl] = fut.result()
    else:
        acc = kernels.qr_cocycle_batch(mats_t, symbols, burn_in, qr_every)

    counted = actual_steps - burn_in
    per_trial = np.sort(-acc / counted, axis=1)  # ascending exponents per trial
    chi = per_trial.mean(axis=0)
    stderr = per_trial.std(axis=0, ddof=1) / math.sqrt(trials)
    return LyapunovSpectrum(chi=chi, stderr=stderr, steps=actual_steps, trials=trials)


def lyapunov_dimension(h: float, chi: Union[LyapunovSpectrum, np.ndarray], d: Optional[int] = None) -> float:
    """min over k of { k + (h - sum_{j<=k} chi_j)/chi_{k+1} }, capped at d.

    Equivalently: find the largest k with sum_{j<=k} chi_j <= h and
    interpolate into the next exponent.
    """
    if h < 0:
        raise ValueError(f"entropy must be >= 0, got {h}")
    values = chi.chi if isinstance(chi, LyapunovSpectrum) else np.asarray(chi, dtype=np.float64)
    if np.any(values <= 0):
        raise ValueError("exponents must be strictly positive")
    dim = len(values) if d is None else d
    if dim != len(values):
        raise ValueError(f"spectrum has {len(values)} exponents, expected {dim}")
    cumulative = 0.0
    best = math.inf
    for k in range(dim):
        best = min(best, k + (h - cumulative) / values[k])
        cumulative += values[k]
    return float(min(max(best, 0.0), dim))


@dataclass(frozen=True)
class GapReport:
    """Classification of one singular-value gap from finite-level ratios."""

    gap: int  # i in 1..d-1, between alpha_i and alpha_{i+1}
    classification: str  # dominated | undominated | inconclusive
    decay_rate: float  # fitted slope of log max-ratio against n (log tau estimate)
    r2: float
    min_ratio: float  # smallest ratio observed at n_max
    max_ratio_first: float  # largest ratio at n = 1


@dataclass(frozen=True)
class DominationReport:
    gaps: Tuple[GapReport, ...]
    n_max: int
    mode: str

    @property
    def all_dominated(self) -> bool:
        return all(g.classification == "dominated" for g in self.gaps)


SLOPE_THRESHOLD = -0.01
R2_THRESHOLD = 0.9


def _fit_line(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def domination_test(
    ifs: AffineIFS,
    n_max: int,
    mode: str = "exhaustive",
    *,
    sample_count: int = 4096,
    rng=None,
    budget: int = 2**22,
) -> DominationReport:
    """Classify each singular-value gap from ratio statistics over words.

    For every word length up to n_max and every gap i the extremes of
    alpha_{i+1}/alpha_i are computed (exhaustively or over sampled words).
    A gap is dominated when the fitted decay of the worst ratio is clearly
    negative, undominated when ratios stay comparable to their level-1
    value, and inconclusive otherwise.
    """
    ifs.require_contractive()
    if n_max < 4:
        raise ValueError(f"need n_max >= 4, got {n_max}")
    d = ifs.dim
    if d < 2:
        raise ValueError("domination gaps require dimension >= 2")
    gen = as_generator(rng)
    lengths = np.arange(1, n_max + 1)
    log_max = np.empty((len(lengths), d - 1))
    log_min = np.empty((len(lengths), d - 1))
    for t, n in enumerate(lengths):
        if mode == "exhaustive":
            if ifs.n_maps**int(n) > budget:
                raise BudgetError(
                    f"{ifs.n_maps}**{n} words exceed the {budget} budget; use sampled mode"
                )
            logsv = kernels.word_logsv_level(ifs.matrices, int(n))
        elif mode == "sampled":
            symbols = gen.integers(0, ifs.n_maps, size=(sample_count, int(n)))
            prods = np.broadcast_to(np.eye(d), (sample_count, d, d)).copy()
            for col in range(int(n)):
                prods = prods @ ifs.matrices[symbols[:, col]]
            logsv = np.log(kernels.singular_values_batch(prods))
        else:
            raise ValueError(f"mode must be 'exhaustive' or 'sampled', got {mode!r}")
        ratios = logsv[:, 1:] - logsv[:, :-1]  # log(alpha_{i+1}/alpha_i) <= 0
        log_max[t] = ratios.max(axis=0)
        log_min[t] = ratios.min(axis=0)

    gaps = []
    for i in range(d - 1):
        slope, r2 = _fit_line(lengths.astype(float), log_max[:, i])
        min_ratio = math.exp(log_min[-1, i])
        max_first = math.exp(log_max[0, i])
        if slope < SLOPE_THRESHOLD and r2 > R2_THRESHOLD:
            cls = "dominated"
        elif min_ratio >= 0.5 * max_first:
            cls = "undominated"
        else:
            cls = "inconclusive"
        gaps.append(
            GapReport(
                gap=i + 1,
                classification=cls,
                decay_rate=slope,
                r2=r2,
                min_ratio=min_ratio,
                max_ratio_first=max_first,
            )
        )
    return DominationReport(gaps=tuple(gaps), n_max=n_max, mode=mode)


EIGEN_RATIO_TOL = 1e-8
ANGLE_TOL = 1e-8


@dataclass(frozen=True)
class PinchingTwistingResult:
    pinching_word: Optional[Word]
    twisting_word: Optional[Word]
    eigenvalues: Optional[Tuple[float, float]]

    @property
    def found(self) -> bool:
        return self.pinching_word is not None and self.twisting_word is not None


def _real_distinct_eigen(mat: np.ndarray):
    """Eigenvalues of a 2x2 if real with distinct absolute value, else None."""
    tr = mat[0, 0] + mat[1, 1]
    det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    disc = tr * tr - 4.0 * det
    if disc <= 0.0:
        return None
    root = math.sqrt(disc)
    lam1 = (tr + root) / 2.0
    lam2 = (tr - root) / 2.0
    hi, lo = max(abs(lam1), abs(lam2)), min(abs(lam1), abs(lam2))
    if lo == 0.0 or hi / lo <= 1.0 + EIGEN_RATIO_TOL:
        return None
    if abs(lam1) < abs(lam2):
        lam1, lam2 = lam2, lam1
    return lam1, lam2


def _eigenline(mat: np.ndarray, lam: float) -> np.ndarray:
    a, b = mat[0, 0] - lam, mat[0, 1]
    c, e = mat[1, 0], mat[1, 1] - lam
    v1 = np.array([-b, a])
    v2 = np.array([-e, c])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    norm = np.linalg.norm(v)
    if norm == 0.0:  # matrix is a multiple of the identity; no preferred line
        return np.array([1.0, 0.0])
    return v / norm


def _line_angle_sin(u: np.ndarray, w: np.ndarray) -> float:
    cross = abs(u[0] * w[1] - u[1] * w[0])
    return cross / (np.linalg.norm(u) * np.linalg.norm(w))


def pinching_twisting_search(ifs: AffineIFS, max_len: int) -> PinchingTwistingResult:
    """Breadth-first witness search over planar word products.

    A pinching witness is a word whose product has real eigenvalues of
    distinct modulus; a twisting witness then maps each eigenline of that
    product strictly off both eigenlines. Together they certify a simple
    Lyapunov spectrum.
    """
    if ifs.dim != 2:
        raise NotImplementedError("witness search is implemented for dimension 2 only")
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")

    pinching_word = None
    eigen = None
    for length in range(1, max_len + 1):
        for w in enumerate_words(ifs.n_maps, length):
            eig = _real_distinct_eigen(word_product(ifs.matrices, w))
            if eig is not None:
                pinching_word = w
                eigen = eig
                break
        if pinching_word is not None:
            break
    if pinching_word is None:
        return PinchingTwistingResult(None, None, None)

    pin_mat = word_product(ifs.matrices, pinching_word)
    lines = [_eigenline(pin_mat, lam) for lam in eigen]
    for length in range(1, max_len + 1):
        for w in enumerate_words(ifs.n_maps, length):
            b = word_product(ifs.matrices, w)
            if all(
                _line_angle_sin(b @ e_line, f_line) > ANGLE_TOL
                for e_line in lines
                for f_line in lines
            ):
                return PinchingTwistingResult(pinching_word, w, eigen)
    return PinchingTwistingResult(pinching_word, None, eigen)
