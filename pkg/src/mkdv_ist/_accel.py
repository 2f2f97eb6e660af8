"""Backend selection for the hot numerical kernels.

Kernels are written once as plain loops and compiled with ``numba.njit`` when
available.  Setting ``MKDV_IST_DISABLE_NUMBA=1`` in the environment (read at
import time) switches every kernel to its vectorised numpy counterpart instead.
"""

from __future__ import annotations

import os

_FALSEY = {"", "0", "false", "no", "off"}

DISABLE_NUMBA = os.environ.get("MKDV_IST_DISABLE_NUMBA", "").strip().lower() not in _FALSEY

try:  # pragma: no cover - exercised implicitly
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

USE_NUMBA = (_numba is not None) and not DISABLE_NUMBA


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise an identity decorator."""
    if USE_NUMBA:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
