"""Kernel backend selection.

The hot kernels exist twice: a compiled Cython extension (``affdim._core``)
and a pure numpy fallback (``affdim._purepy``). The compiled one is
preferred when importable; set ``AFFDIM_BACKEND=python`` or
``AFFDIM_BACKEND=compiled`` to force a choice. ``affdim.bench`` compares
the two.
"""
from __future__ import annotations

import os

_requested = os.environ.get("AFFDIM_BACKEND", "").strip().lower()

if _requested in ("python", "purepy", "pure"):
    from . import _purepy as kernels
elif _requested in ("compiled", "cython", "c"):
    from . import _core as kernels  # type: ignore[no-redef]
else:
    try:
        from . import _core as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _purepy as kernels

BACKEND = kernels.BACKEND_NAME


def get_kernels(name: str | None = None):
    """Return a kernel module by name ('compiled' or 'python'), or the active one."""
    if name is None:
        return kernels
    if name == "python":
        from . import _purepy

        return _purepy
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")
