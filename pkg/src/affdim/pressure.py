"""Singular value pressure and the affinity dimension bracket.

The level-n pressure sum a_n(s) = log sum over words of phi^s(A_w) is
subadditive in n, so a_n(s)/n is always an upper estimate of the pressure
and the root s_n of a_n is a certified upper bound for the affinity
dimension, nonincreasing along n -> 2n. The lower side of the bracket is
empirical: the Lyapunov dimension of the step-n measure whose weights are
phi^{s_n}(A_w).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ._backend import kernels
from ._svf import log_svf_from_logsv, log_svf_scalar
from .errors import BudgetError
from .ifs import AffineIFS
from .linalg import as_generator, singular_values, singular_values_batch
from .words import StepMeasure, Word, enumerate_words, validate_word, word_product

DEFAULT_WORD_BUDGET = 2**24
MATERIALIZE_CAP = 2**21
BISECTION_TOL = 1e-9
BISECTION_MAX_ITER = 200


def svf(a, s: float) -> float:
    """Singular value function phi^s: alpha_1 ... alpha_floor(s) *
    alpha_ceil(s)^(s - floor(s)) for 0 <= s <= d, |det A|^(s/d) above d."""
    spec = singular_values(a)
    if spec.mininorm <= 0.0:
        raise ValueError("phi^s requires an invertible matrix")
    return math.exp(log_svf_scalar(np.log(spec.values), s))


def _check_budget(n_maps: int, n: int, budget: int):
    if n_maps**n > budget:
        raise BudgetError(f"{n_maps}**{n} words exceed the word budget of {budget}")


def _logsumexp(a: np.ndarray) -> float:
    m = float(a.max())
    return m + float(np.log(np.exp(a - m).sum()))


def pressure_sum(ifs: AffineIFS, s: float, n: int, *, budget: int = DEFAULT_WORD_BUDGET) -> float:
    """a_n(s) = log sum over all N^n words of phi^s(A_w), exact enumeration."""
    ifs.require_contractive()
    if s < 0:
        raise ValueError(f"exponent s must be >= 0, got {s}")
    if n < 0:
        raise ValueError(f"level n must be >= 0, got {n}")
    _check_budget(ifs.n_maps, n, budget)
    return float(kernels.pressure_logsumexp(ifs.matrices, n, s))


@dataclass(frozen=True)
class PressureEstimate:
    """Finite-level pressure data at a fixed exponent."""

    s: float
    n: int
    upper: float  # a_n / n, >= P(s) by subadditivity
    slope: float  # a_n - a_{n-1}, secondary estimate of P(s)


def pressure_estimate(
    ifs: AffineIFS, s: float, n: int, *, budget: int = DEFAULT_WORD_BUDGET
) -> PressureEstimate:
    if n < 1:
        raise ValueError(f"level n must be >= 1, got {n}")
    a_n = pressure_sum(ifs, s, n, budget=budget)
    a_prev = pressure_sum(ifs, s, n - 1, budget=budget)
    return PressureEstimate(s=s, n=n, upper=a_n / n, slope=a_n - a_prev)


def _root_upper_limit(ifs: AffineIFS) -> float:
    # a_n(s) <= n (log N + s log |A|), so the root sits below this for sure
    return math.log(ifs.n_maps) / (-math.log(ifs.norm)) + 1.0


def _bisect_root(f, lo: float, hi: float, tol: float) -> float:
    """Root of a decreasing function with f(lo) > 0 > f(hi); returns the
    upper end of the final bracket so f(result) <= 0."""
    for _ in range(BISECTION_MAX_ITER):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        v = f(mid)
        if v > 0.0:
            lo = mid
        elif v < 0.0:
            hi = mid
        else:
            return mid
    return hi


def affinity_upper(
    ifs: AffineIFS,
    n: int,
    tol: float = BISECTION_TOL,
    *,
    budget: int = DEFAULT_WORD_BUDGET,
) -> float:
    """Root s_n of a_n(s) = 0, capped at d; a certified upper bound of the
    affinity dimension since a_n(s_n) <= 0 forces P(s_n) <= 0."""
    ifs.require_contractive()
    if n < 1:
        raise ValueError(f"level n must be >= 1, got {n}")
    _check_budget(ifs.n_maps, n, budget)
    hi = _root_upper_limit(ifs)
    if ifs.n_maps**n <= MATERIALIZE_CAP:
        logsv = kernels.word_logsv_level(ifs.matrices, n)

        def f(s):
            return _logsumexp(log_svf_from_logsv(logsv, s))

    else:

        def f(s):
            return kernels.pressure_logsumexp(ifs.matrices, n, s)

    # a_n(0) = n log N > 0 and a_n(hi) < 0, so the bracket is guaranteed
    root = _bisect_root(f, 0.0, hi, tol)
    return min(float(ifs.dim), root)


@dataclass(frozen=True)
class SubsystemMeasure:
    """Step-n measure with weights phi^{s}(A_w) over a chosen word set."""

    exponent: float
    measure: StepMeasure
    degenerate: bool  # root pinned at the s = 0 boundary (single-word support)


def subsystem_measure(
    ifs: AffineIFS,
    n: int,
    support: Union[str, Sequence[Word]] = "full",
    *,
    tol: float = BISECTION_TOL,
    budget: int = DEFAULT_WORD_BUDGET,
) -> SubsystemMeasure:
    """Solve sum over the support of phi^{s}(A_w) = 1 and return the
    step-n measure weighted by phi^{s}(A_w)."""
    ifs.require_contractive()
    if n < 1:
        raise ValueError(f"block length n must be >= 1, got {n}")
    if isinstance(support, str):
        if support != "full":
            raise ValueError(f"support must be 'full' or a word list, got {support!r}")
        _check_budget(ifs.n_maps, n, budget)
        words: Tuple[Word, ...] = tuple(enumerate_words(ifs.n_maps, n))
        logsv = kernels.word_logsv_level(ifs.matrices, n)
    else:
        words = tuple(validate_word(w, ifs.n_maps) for w in support)
        if len(words) == 0:
            raise ValueError("support is empty")
        if any(len(w) != n for w in words):
            raise ValueError(f"support words must all have length {n}")
        prods = np.stack([word_product(ifs.matrices, w) for w in words])
        logsv = np.log(singular_values_batch(prods))

    if len(words) == 1:
        return SubsystemMeasure(
            exponent=0.0,
            measure=StepMeasure(block_length=n, support=words, weights=np.array([1.0])),
            degenerate=True,
        )

    def f(s):
        return _logsumexp(log_svf_from_logsv(logsv, s))

    root = _bisect_root(f, 0.0, _root_upper_limit(ifs), tol)
    weights = np.exp(log_svf_from_logsv(logsv, root))
    weights = weights / weights.sum()
    return SubsystemMeasure(
        exponent=float(root),
        measure=StepMeasure(block_length=n, support=words, weights=weights),
        degenerate=False,
    )


@dataclass(frozen=True)
class QuasiMultReport:
    """Worst pair ratios phi^s(A_i) phi^s(A_j) / phi^s(A_ij) at one level."""

    n: int
    s: float
    c_lower: float  # best pair ratio, 1 for an exactly multiplicative family
    c_defect: float  # worst pair ratio; growth along n contradicts quasi-multiplicativity
    pairs: int
    sampled: bool


def quasi_multiplicativity_diagnostic(
    ifs: AffineIFS,
    s: float,
    n: int,
    *,
    pair_budget: int = 2**20,
    sample_count: int = 2**17,
    rng=None,
) -> QuasiMultReport:
    """Extremal concatenation defects of phi^s over level-n word pairs.

    Falls back to sampled pairs (with the sample count recorded) when the
    N^{2n} pair space exceeds the budget.
    """
    ifs.require_contractive()
    if s < 0:
        raise ValueError(f"exponent s must be >= 0, got {s}")
    n_words = ifs.n_maps**n
    _check_budget(ifs.n_maps, n, MATERIALIZE_CAP)
    prods = kernels.word_products_level(ifs.matrices, n)
    logphi = log_svf_from_logsv(np.log(singular_values_batch(prods)), s)

    total_pairs = n_words * n_words
    if total_pairs <= pair_budget:
        idx_i = np.repeat(np.arange(n_words), n_words)
        idx_j = np.tile(np.arange(n_words), n_words)
        sampled = False
    else:
        gen = as_generator(rng)
        idx_i = gen.integers(0, n_words, size=sample_count)
        idx_j = gen.integers(0, n_words, size=sample_count)
        sampled = True

    best = math.inf
    worst = -math.inf
    chunk = 1 << 16
    for start in range(0, len(idx_i), chunk):
        ii = idx_i[start : start + chunk]
        jj = idx_j[start : start + chunk]
        combined = prods[ii] @ prods[jj]
        log_combined = log_svf_from_logsv(np.log(singular_values_batch(combined)), s)
        log_ratio = logphi[ii] + logphi[jj] - log_combined
        best = min(best, float(log_ratio.min()))
        worst = max(worst, float(log_ratio.max()))
    return QuasiMultReport(
        n=n,
        s=s,
        c_lower=math.exp(best),
        c_defect=math.exp(worst),
        pairs=len(idx_i),
        sampled=sampled,
    )


@dataclass(frozen=True)
class DimensionBracket:
    """Certified upper bound and empirical lower estimate at level n."""

    upper: float  # root of a_n, capped at d
    lower: float  # Lyapunov dimension of the level-n subsystem measure
    n: int
    entropy: float
    chi: np.ndarray
    chi_stderr: np.ndarray
    subsystem_exponent: float


def dimension_bracket(
    ifs: AffineIFS,
    n: int,
    *,
    mc_steps: int = 50_000,
    trials: int = 6,
    rng=None,
    tol: float = BISECTION_TOL,
    budget: int = DEFAULT_WORD_BUDGET,
) -> DimensionBracket:
    """Bracket the affinity dimension: s_n from above, the Lyapunov
    dimension of the phi^{s_n}-weighted step-n measure from below."""
    from .lyapunov import exponents_mc, lyapunov_dimension
    from .words import entropy as measure_entropy

    sub = subsystem_measure(ifs, n, "full", tol=tol, budget=budget)
    upper = affinity_upper(ifs, n, tol=tol, budget=budget)
    spectrum = exponents_mc(ifs, sub.measure, steps=mc_steps, trials=trials, rng=rng)
    h = measure_entropy(sub.measure)
    lower = lyapunov_dimension(h, spectrum)
    return DimensionBracket(
        upper=upper,
        lower=lower,
        n=n,
        entropy=h,
        chi=spectrum.chi,
        chi_stderr=spectrum.stderr,
        subsystem_exponent=sub.exponent,
    )
