"""Log-domain singular value function shared by both kernel backends.

Kept dependency-free so the compiled and pure backends, as well as the
high-level modules, all evaluate the exact same branch logic.
"""
from __future__ import annotations

import math

import numpy as np


def log_svf_from_logsv(logsv: np.ndarray, s: float) -> np.ndarray:
    """log phi^s evaluated from rows of log singular values (descending).

    ``logsv`` has shape (..., d). For 0 <= s <= d the value is
    sum of the first floor(s) entries plus the fractional part times the
    next one; for s > d it is (s/d) times the full sum. Integer s uses the
    lower branch, which the upper branch matches there.
    """
    logsv = np.asarray(logsv, dtype=np.float64)
    d = logsv.shape[-1]
    if s < 0:
        raise ValueError(f"exponent s must be >= 0, got {s}")
    if s > d:
        return (s / d) * logsv.sum(axis=-1)
    k = int(math.floor(s))
    frac = s - k
    out = logsv[..., :k].sum(axis=-1)
    if frac > 0.0:
        out = out + frac * logsv[..., k]
    return out


def log_svf_scalar(logsv, s: float) -> float:
    return float(log_svf_from_logsv(np.asarray(logsv, dtype=np.float64), s))
