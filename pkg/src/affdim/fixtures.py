"""Reference systems used by tests, benchmarks, and the shipped spec files."""
from __future__ import annotations

import importlib.resources
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .ifs import AffineIFS
from .linalg import as_generator


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def cantor_middle_thirds() -> AffineIFS:
    """d = 1, two maps x/3 and x/3 + 2/3; attractor is the middle-thirds set."""
    return AffineIFS(
        matrices=np.array([[[1.0 / 3.0]], [[1.0 / 3.0]]]),
        translations=np.array([[0.0], [2.0 / 3.0]]),
    )


def filled_square() -> AffineIFS:
    """Four maps at ratio 1/2 tiling the unit square."""
    shift = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]])
    return AffineIFS(
        matrices=np.repeat(0.5 * np.eye(2)[None], 4, axis=0),
        translations=shift,
    )


def sierpinski() -> AffineIFS:
    """Three maps at ratio 1/2; similarity dimension log 3 / log 2."""
    shift = np.array([[0.0, 0.0], [0.5, 0.0], [0.25, 0.5]])
    return AffineIFS(
        matrices=np.repeat(0.5 * np.eye(2)[None], 3, axis=0),
        translations=shift,
    )


def segment() -> AffineIFS:
    """Degenerate planar pair whose attractor is the unit segment on the x-axis."""
    return AffineIFS(
        matrices=np.repeat(0.5 * np.eye(2)[None], 2, axis=0),
        translations=np.array([[0.0, 0.0], [0.5, 0.0]]),
    )


def diagonal_triple() -> AffineIFS:
    """Three copies of diag(1/2, 1/4); closed-form pressure and exponents."""
    return AffineIFS(
        matrices=np.repeat(np.diag([0.5, 0.25])[None], 3, axis=0),
        translations=np.array([[0.0, 0.0], [0.375, 0.5], [0.75, 0.0]]),
    )


def diagonal_pair(weights=None) -> AffineIFS:
    """Two copies of diag(1/2, 1/4) with optional branch probabilities."""
    return AffineIFS(
        matrices=np.repeat(np.diag([0.5, 0.25])[None], 2, axis=0),
        translations=np.array([[0.0, 0.0], [0.5, 0.75]]),
        weights=weights,
    )


def unit_circle_translations(n_maps: int = 3, phase: float = math.pi / 2.0) -> np.ndarray:
    """Translations equidistributed on the unit circle; pairwise distance
    sqrt(3) for three maps."""
    angles = phase + 2.0 * math.pi * np.arange(n_maps) / n_maps
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


def unit_circle_ifs(
    norm: float,
    n_maps: int = 3,
    perturb_seed: Optional[int] = None,
    weights=None,
) -> AffineIFS:
    """Equilateral unit-circle geometry with every map norm pinned to ``norm``.

    Without a seed the maps are scaled rotations (conformal); with one,
    each map becomes rotation * diag(norm, c * norm) * rotation with a
    seeded aspect c in [0.6, 0.95), keeping the operator norm exact.
    """
    if not 0.0 < norm < 1.0:
        raise ValueError(f"norm must be in (0, 1), got {norm}")
    trans = unit_circle_translations(n_maps)
    mats = []
    if perturb_seed is None:
        golden = math.pi * (3.0 - math.sqrt(5.0))
        for k in range(n_maps):
            mats.append(norm * rotation(golden * (k + 1)))
    else:
        gen = as_generator(perturb_seed)
        for _ in range(n_maps):
            theta, psi = gen.uniform(0.0, 2.0 * math.pi, size=2)
            aspect = gen.uniform(0.6, 0.95)
            mats.append(rotation(theta) @ np.diag([norm, aspect * norm]) @ rotation(psi))
    return AffineIFS(matrices=np.stack(mats), translations=trans, weights=weights)


def f1() -> AffineIFS:
    """The shipped end-to-end fixture: unit-circle geometry at norm 0.3,
    seed-42 perturbed matrices."""
    return unit_circle_ifs(0.3, perturb_seed=42)


def rotation_projection_pair() -> AffineIFS:
    """Quarter-turn rotation plus a strongly squashing diagonal map.

    Long diagonal powers approach a rank-one projection P with P R P = 0
    for the quarter turn, so concatenation defects of phi^1 grow without
    bound.
    """
    return AffineIFS(
        matrices=np.stack([0.5 * rotation(math.pi / 2.0), np.diag([0.8, 0.01])]),
        translations=np.array([[0.0, 0.0], [1.0, 0.0]]),
    )


def fixture_path(name: str) -> Path:
    """Path of a shipped spec file, e.g. ``fixture_path('f1')``."""
    resource = importlib.resources.files("affdim") / "fixtures" / f"{name}.json"
    return Path(str(resource))
