"""Finite words, word-indexed matrix products, and block Bernoulli measures.

Words are plain tuples of symbols from {1..N}; the empty tuple is the
empty word. Measures over length-n blocks (step-n Bernoulli measures)
carry a lexicographically sorted support and positive weights summing
to one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Tuple

import numpy as np

from .errors import BudgetError
from .linalg import as_generator

Word = Tuple[int, ...]

ENUMERATION_GUARD = 2**31
WEIGHT_SUM_TOL = 1e-12


def validate_word(word: Iterable[int], n_branches: int) -> Word:
    w = tuple(int(s) for s in word)
    for s in w:
        if not 1 <= s <= n_branches:
            raise ValueError(f"symbol {s} outside 1..{n_branches}")
    return w


def enumerate_words(n_branches: int, length: int) -> Iterator[Word]:
    """All N^n words of the given length in lexicographic order."""
    if n_branches < 2:
        raise ValueError(f"need at least 2 branches, got {n_branches}")
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    if n_branches**length > ENUMERATION_GUARD:
        raise BudgetError(
            f"{n_branches}**{length} words exceed the {ENUMERATION_GUARD} enumeration guard"
        )
    if length == 0:
        yield ()
        return
    word = [1] * length
    while True:
        yield tuple(word)
        i = length - 1
        while i >= 0 and word[i] == n_branches:
            word[i] = 1
            i -= 1
        if i < 0:
            return
        word[i] += 1


def word_count(n_branches: int, length: int) -> int:
    return n_branches**length


def word_product(matrices: Sequence[np.ndarray], word: Iterable[int]) -> np.ndarray:
    """Left-to-right product A_{w_1} ... A_{w_n}; identity for the empty word."""
    mats = np.asarray(matrices, dtype=np.float64)
    d = mats.shape[-1]
    out = np.eye(d)
    for s in word:
        out = out @ mats[s - 1]
    return out


def common_prefix(a: Iterable[int], b: Iterable[int]) -> Word:
    out = []
    for x, y in zip(a, b):
        if x != y:
            break
        out.append(x)
    return tuple(out)


def words_to_array(words: Sequence[Word]) -> np.ndarray:
    """0-based (m, L) symbol array for kernels; words must share a length."""
    arr = np.asarray(words, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None] if len(words) == 1 else arr.reshape(len(words), -1)
    return arr - 1


@dataclass(frozen=True)
class StepMeasure:
    """Bernoulli measure on length-n blocks with a fixed lex-ordered support.

    ``support`` lists distinct words of length ``block_length``; weights
    are strictly positive and sum to one. Zero weights are rejected: drop
    the word from the support instead.
    """

    block_length: int
    support: Tuple[Word, ...]
    weights: np.ndarray
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.block_length
        if n < 1:
            raise ValueError(f"block length must be >= 1, got {n}")
        if len(self.support) == 0:
            raise ValueError("support is empty")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(self.support),):
            raise ValueError("one weight per support word required")
        if np.any(w <= 0.0):
            raise ValueError("weights must be strictly positive (drop the word instead)")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1 within {WEIGHT_SUM_TOL}")
        for word in self.support:
            if len(word) != n:
                raise ValueError(f"support word {word} does not have block length {n}")
        order = sorted(range(len(self.support)), key=lambda i: self.support[i])
        sorted_support = tuple(self.support[i] for i in order)
        if len(set(sorted_support)) != len(sorted_support):
            raise ValueError("support words must be distinct")
        w = w[order]
        object.__setattr__(self, "support", sorted_support)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_cdf", np.cumsum(w))

    @classmethod
    def bernoulli(cls, probabilities) -> "StepMeasure":
        """Full-support single-symbol measure from a probability vector."""
        p = np.asarray(probabilities, dtype=np.float64)
        return cls(
            block_length=1,
            support=tuple((i + 1,) for i in range(len(p))),
            weights=p,
        )

    @classmethod
    def uniform(cls, n_branches: int) -> "StepMeasure":
        return cls.bernoulli(np.full(n_branches, 1.0 / n_branches))

    @property
    def n_branches_lower_bound(self) -> int:
        return max(max(w) for w in self.support)

    def mass(self, word: Iterable[int]) -> float:
        """Cylinder mass of a word made of whole blocks."""
        w = tuple(word)
        n = self.block_length
        if len(w) % n != 0:
            raise ValueError(f"word length {len(w)} is not a multiple of block length {n}")
        index = {blk: i for i, blk in enumerate(self.support)}
        out = 1.0
        for start in range(0, len(w), n):
            blk = w[start : start + n]
            if blk not in index:
                return 0.0
            out *= float(self.weights[index[blk]])
        return out

    def sample_blocks(self, blocks: int, rng) -> np.ndarray:
        """Indices into the support, iid by inverse CDF; (blocks,) int64."""
        rng = as_generator(rng)
        u = rng.random(blocks)
        return np.searchsorted(self._cdf, u, side="right").astype(np.int64)

    def sample_symbols(self, blocks: int, rng) -> np.ndarray:
        """0-based symbol stream of length blocks * n, iid blocks."""
        idx = self.sample_blocks(blocks, rng)
        table = words_to_array(list(self.support))
        return table[idx].reshape(-1)


def sample_word(measure: StepMeasure, blocks: int, rng) -> Word:
    """A word of length blocks * n drawn iid from the block weight table."""
    if blocks < 1:
        raise ValueError(f"blocks must be >= 1, got {blocks}")
    return tuple(int(s) + 1 for s in measure.sample_symbols(blocks, rng))


def entropy(measure: StepMeasure) -> float:
    """Shannon entropy in nats per original symbol: -(1/n) sum w log w."""
    w = measure.weights
    return float(-(w * np.log(w)).sum() / measure.block_length)
