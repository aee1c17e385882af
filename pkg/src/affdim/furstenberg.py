"""Grassmannian cocycle orbits and empirical transversality diagnostics.

The inverse-matrix action on k-planes is followed along sampled words
with per-step re-orthonormalization; accumulated triangular factors give
stable log-scale singular value data for the limit identities relating
restricted mininorms and projected singular value functions to the
Lyapunov spectrum. The transversality estimators rotate the translation
tuple (by an angle in the plane, by Haar orthogonal matrices above) and
measure how often projected point differences get small.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ._backend import kernels
from ._svf import log_svf_from_logsv
from .ifs import AffineIFS, membership_margin
from .linalg import Subspace, as_generator, haar_orthogonal, projected_singular_values
from .lyapunov import LyapunovSpectrum
from .words import StepMeasure, Word, common_prefix, validate_word, word_product

ORBIT_NEAR_SINGULAR_ABS = 1e-14


@dataclass(frozen=True)
class OrbitSample:
    """Orbit of a k-plane under the inverse-matrix cocycle.

    ``bases`` holds the orthonormal frames along the orbit (steps+1 of
    them, including the Haar-random start); ``logs`` the per-step
    log-diagonals of the triangular QR factors, from which restricted
    norms along the orbit are reconstructed without underflow.
    """

    symbols: np.ndarray  # (steps,), 0-based driving word
    bases: np.ndarray  # (steps + 1, d, k)
    logs: np.ndarray  # (steps, k)
    k: int

    @property
    def steps(self) -> int:
        return len(self.symbols)

    def subspace(self, step: int = -1) -> Subspace:
        return Subspace(basis=self.bases[step].T)


def _sample_stream(measure: StepMeasure, steps: int, rng) -> np.ndarray:
    blocks = -(-steps // measure.block_length)
    return measure.sample_symbols(blocks, rng)


def grassmann_orbit(
    ifs: AffineIFS, measure: StepMeasure, k: int, steps: int, rng=None
) -> OrbitSample:
    """Follow V -> orthonormalize(A_i^{-1} V) from a Haar-random k-plane."""
    ifs.require_contractive()
    if not 1 <= k <= ifs.dim - 1:
        raise ValueError(f"need 1 <= k <= d-1 = {ifs.dim - 1}, got {k}")
    if np.any(ifs.map_mininorms < ORBIT_NEAR_SINGULAR_ABS):
        raise ValueError("a map is singular to working precision; orbit would blow up")
    gen = as_generator(rng)
    start = haar_orthogonal(ifs.dim, gen)[:, :k].copy()
    symbols = _sample_stream(measure, steps, gen)[:steps]
    inverses = np.linalg.inv(ifs.matrices)
    logs, bases = kernels.chain_qr_logs(inverses, symbols, start)
    return OrbitSample(symbols=symbols, bases=bases, logs=logs, k=k)


def furstenberg_limit_residual(
    orbit: OrbitSample, spectrum: LyapunovSpectrum, k: Optional[int] = None
) -> np.ndarray:
    """Residual series of the restricted-mininorm growth rate.

    r_n = (1/n) log m(A_{i_n}^{-1} ... A_{i_1}^{-1} | V) - chi_{d-k+1},
    with the mininorm read off the accumulated triangular factors.
    """
    if k is None:
        k = orbit.k
    if k != orbit.k:
        raise ValueError(f"orbit tracks a {orbit.k}-plane, not {k}")
    d = spectrum.dim
    cum = np.cumsum(orbit.logs, axis=0)
    log_mininorm = cum.min(axis=1)
    n = np.arange(1, orbit.steps + 1, dtype=np.float64)
    return log_mininorm / n - spectrum.chi[d - k]


def furstenberg_typical_subspace(
    ifs: AffineIFS, measure: StepMeasure, k: int, *, steps: int = 2000, rng=None
) -> Subspace:
    """Tail of a long orbit, the standard sampler for the stationary measure."""
    orbit = grassmann_orbit(ifs, measure, k, steps, rng)
    return orbit.subspace(-1)


def projected_svf_limit_residual(
    ifs: AffineIFS,
    measure: StepMeasure,
    v: Subspace,
    s: float,
    steps: int,
    rng=None,
) -> np.ndarray:
    """Residual of -(1/n) log phi^s(P_{V^perp} A_{w|n}) against the
    partial exponent sum, for V in G(d, d-k) and 0 <= s <= k.

    The projected products are accumulated through the transposed cocycle
    acting on a basis of V^perp, QR-refactorized every step.
    """
    ifs.require_contractive()
    if v.dim_ambient != ifs.dim:
        raise ValueError("subspace ambient dimension does not match the system")
    k = ifs.dim - v.dim
    if k < 1:
        raise ValueError("V must be a proper subspace")
    if not 0.0 <= s <= k:
        raise ValueError(f"need 0 <= s <= k = {k}, got {s}")
    from .lyapunov import exponents_mc  # local to avoid import cycle at module load

    gen = as_generator(rng)
    symbols = _sample_stream(measure, steps, gen)[:steps]
    basis_perp = v.complement().basis.T.copy()  # (d, k)
    mats_t = np.ascontiguousarray(ifs.matrices.transpose(0, 2, 1))
    logs, _ = kernels.chain_qr_logs(mats_t, symbols, basis_perp)
    cum = np.cumsum(logs, axis=0)
    cum_sorted = -np.sort(-cum, axis=1)  # descending per row
    log_phi = log_svf_from_logsv(cum_sorted, s)
    spectrum = exponents_mc(ifs, measure, steps=max(10_000, steps), trials=4, rng=gen)
    target = float(log_svf_from_logsv(-spectrum.chi, s))  # sum chi_1..floor(s) + frac chi_ceil
    n = np.arange(1, steps + 1, dtype=np.float64)
    return -log_phi / n + target


@dataclass(frozen=True)
class DeltaEstimate:
    """Sampled lower estimate of the planar transversality constant."""

    delta: float  # raw minimum with the tail-truncation correction folded in
    raw_min: float
    correction: float
    samples: int
    depth: int


MAX_PREFIX = 6
MAX_CYCLE = 4


def _rotation(alpha):
    c, s = np.cos(alpha), np.sin(alpha)
    return np.array([[c, -s], [s, c]])


def _periodic_words(u: np.ndarray, n_maps: int, depth: int) -> np.ndarray:
    """Decode uniform rows into (samples, depth) eventually-periodic words.

    Layout per row: first symbol, prefix length + symbols, cycle length +
    symbols; the word is first + prefix + cycle repeated, truncated.
    """
    samples = u.shape[0]
    first = np.floor(u[:, 0] * n_maps).astype(np.int64)
    plen = np.floor(u[:, 1] * (MAX_PREFIX + 1)).astype(np.int64)
    clen = 1 + np.floor(u[:, 2] * MAX_CYCLE).astype(np.int64)
    prefix = np.floor(u[:, 3 : 3 + MAX_PREFIX] * n_maps).astype(np.int64)
    cycle = np.floor(u[:, 3 + MAX_PREFIX : 3 + MAX_PREFIX + MAX_CYCLE] * n_maps).astype(np.int64)
    head = np.concatenate([first[:, None], prefix], axis=1)  # (samples, 1 + MAX_PREFIX)
    kk = np.arange(depth)[None, :]
    head_len = (1 + plen)[:, None]
    in_head = kk < head_len
    head_idx = np.minimum(kk, MAX_PREFIX)
    cyc_idx = (kk - head_len) % clen[:, None]
    rows = np.arange(samples)[:, None]
    return np.where(in_head, head[rows, head_idx], cycle[rows, cyc_idx])


def _rotated_pairing_sums(
    ifs: AffineIFS, words: np.ndarray, v: np.ndarray, alphas: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """For each sample: <v, pi_alpha(w)> and <v, pi_{alpha+pi/2}(w)>.

    Uses <v, A_{w|k-1} R(alpha) t> = <A_{w|k-1}^T v, R(alpha) t>, so one
    vector recursion serves both angles.
    """
    samples, depth = words.shape
    trans = ifs.translations
    mats_t = ifs.matrices.transpose(0, 2, 1)
    cos_a, sin_a = np.cos(alphas), np.sin(alphas)
    u = v.copy()
    c0 = np.zeros(samples)
    c1 = np.zeros(samples)
    for k in range(depth):
        t = trans[words[:, k]]
        rot = np.stack([cos_a * t[:, 0] - sin_a * t[:, 1], sin_a * t[:, 0] + cos_a * t[:, 1]], axis=1)
        rot_perp = np.stack([-rot[:, 1], rot[:, 0]], axis=1)  # rotate by additional pi/2
        c0 += np.einsum("sd,sd->s", u, rot)
        c1 += np.einsum("sd,sd->s", u, rot_perp)
        if k + 1 < depth:
            u = np.einsum("sde,se->sd", mats_t[words[:, k]], u)
    return c0, c1


def transversality_delta(
    ifs: AffineIFS, samples: int, depth: int = 40, rng=None
) -> DeltaEstimate:
    """Sampled minimum of max(|<v, pair gap>|, |<v, rotated pair gap>|).

    Samples rotation angles, unit directions, and eventually-periodic word
    pairs with distinct first symbols; the second term is the exact angle
    derivative of the first. The tail truncation error is folded in as an
    additive correction, making the estimate a certified lower bound for
    the truncated family.
    """
    if ifs.dim != 2:
        raise ValueError("the angle-derivative estimator is planar (d = 2) only")
    ifs.require_contractive()
    if samples < 1:
        raise ValueError(f"need samples >= 1, got {samples}")
    report = membership_margin(ifs)
    if report.membership_margin <= 0.0:
        warnings.warn(
            "system is outside the open membership condition; the sampled "
            "transversality minimum may be zero",
            stacklevel=2,
        )
    gen = as_generator(rng)
    cols = 2 + 2 + 2 * (3 + MAX_PREFIX + MAX_CYCLE)
    u = gen.random((samples, cols))
    alphas = u[:, 0] * 2.0 * np.pi
    v_angle = u[:, 1] * 2.0 * np.pi
    v = np.stack([np.cos(v_angle), np.sin(v_angle)], axis=1)

    block = 2 + 2  # columns consumed before the word blocks
    wcols = 3 + MAX_PREFIX + MAX_CYCLE
    ui = u[:, block : block + wcols].copy()
    uj = u[:, block + wcols : block + 2 * wcols].copy()
    # force distinct first symbols
    first_i = np.floor(ui[:, 0] * ifs.n_maps).astype(np.int64)
    shift = 1 + np.floor(u[:, 2] * (ifs.n_maps - 1)).astype(np.int64)
    first_j = (first_i + shift) % ifs.n_maps
    words_i = _periodic_words(ui, ifs.n_maps, depth)
    words_j = _periodic_words(uj, ifs.n_maps, depth)
    words_i[:, 0] = first_i
    words_j[:, 0] = first_j

    ci0, ci1 = _rotated_pairing_sums(ifs, words_i, v, alphas)
    cj0, cj1 = _rotated_pairing_sums(ifs, words_j, v, alphas)
    score = np.maximum(np.abs(ci0 - cj0), np.abs(ci1 - cj1))
    raw_min = float(score.min())
    correction = 2.0 * ifs.norm**depth * ifs.radius
    return DeltaEstimate(
        delta=raw_min - correction,
        raw_min=raw_min,
        correction=correction,
        samples=samples,
        depth=depth,
    )


def _project_with_rotated_translations(ifs: AffineIFS, word: Word, alpha: float) -> np.ndarray:
    rot = _rotation(alpha)
    symbols = np.asarray(word, dtype=np.int64) - 1
    return kernels.project_words_batch(ifs.matrices, ifs.translations @ rot.T, symbols[None])[0]


def derivative_identity_residual(ifs: AffineIFS, alpha: float, word, h: float) -> float:
    """Gap between the central difference of alpha -> pi_alpha(w) and the
    quarter-turn projection that is its exact derivative."""
    if ifs.dim != 2:
        raise ValueError("angle differentiation is planar (d = 2) only")
    ifs.require_contractive()
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    w = validate_word(word, ifs.n_maps)
    if len(w) == 0:
        raise ValueError("word must be nonempty")
    plus = _project_with_rotated_translations(ifs, w, alpha + h)
    minus = _project_with_rotated_translations(ifs, w, alpha - h)
    exact = _project_with_rotated_translations(ifs, w, alpha + math.pi / 2.0)
    return float(np.linalg.norm((plus - minus) / (2.0 * h) - exact))


@dataclass(frozen=True)
class TailReport:
    """Empirical small-projection probabilities against the product bound."""

    thresholds: np.ndarray
    probability: np.ndarray  # fraction of group samples below each threshold
    bound: np.ndarray  # prod_i min(1, t / alpha_i(P_V A_{i^j}))
    c_hat: np.ndarray  # probability / bound
    samples: int


def transversality_tail(
    ifs: AffineIFS,
    v: Subspace,
    pair: Tuple[Word, Word],
    t_grid: Sequence[float],
    samples: int,
    rng=None,
) -> TailReport:
    """Estimate P(|P_V (pi_{A, G(v)}(i) - pi_{A, G(v)}(j))| < t) over group
    samples G (uniform rotations in the plane, Haar orthogonal above)."""
    ifs.require_contractive()
    if v.dim_ambient != ifs.dim or v.dim >= ifs.dim:
        raise ValueError("V must be a proper subspace of the ambient space")
    wi = validate_word(pair[0], ifs.n_maps)
    wj = validate_word(pair[1], ifs.n_maps)
    if len(wi) == 0 or len(wj) == 0 or wi == wj:
        raise ValueError("need two distinct nonempty words")
    gen = as_generator(rng)
    t = np.asarray(sorted(float(x) for x in t_grid))
    if np.any(t <= 0):
        raise ValueError("thresholds must be positive")

    d = ifs.dim
    # per-symbol prefix-product sums S_j(w) = sum_{k: w_k = j} A_{w|k-1},
    # so pi_{A, G(v)}(w) = sum_j S_j(w) G v_j for every group element G
    def symbol_sums(word: Word) -> np.ndarray:
        acc = np.zeros((ifs.n_maps, d, d))
        prod = np.eye(d)
        for sym in word:
            acc[sym - 1] += prod
            prod = prod @ ifs.matrices[sym - 1]
        return acc

    diff = symbol_sums(wi) - symbol_sums(wj)
    proj_diff = np.einsum("kd,nde->nke", v.basis, diff)  # (N, k, d)

    if d == 2:
        angles = gen.random(samples) * 2.0 * np.pi
        cs, sn = np.cos(angles), np.sin(angles)
        g = np.empty((samples, 2, 2))
        g[:, 0, 0] = cs
        g[:, 0, 1] = -sn
        g[:, 1, 0] = sn
        g[:, 1, 1] = cs
    else:
        normal = gen.standard_normal((samples, d, d))
        q, r = np.linalg.qr(normal)
        sign = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
        sign = np.where(sign == 0.0, 1.0, sign)
        g = q * sign[:, None, :]

    rotated = np.einsum("sde,ne->snd", g, ifs.translations)  # (samples, N, d)
    vals = np.einsum("nkd,snd->sk", proj_diff, rotated)  # (samples, k)
    norms = np.linalg.norm(vals, axis=1)

    prob = (norms[None, :] < t[:, None]).mean(axis=1)
    alphas = projected_singular_values(v, word_product(ifs.matrices, common_prefix(wi, wj)))
    bound = np.prod(np.minimum(1.0, t[:, None] / alphas[None, :]), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        c_hat = np.where(bound > 0, prob / bound, np.inf)
    return TailReport(thresholds=t, probability=prob, bound=bound, c_hat=c_hat, samples=samples)
