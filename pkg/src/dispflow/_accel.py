"""Numba switch.

Set ``DISPFLOW_DISABLE_NUMBA=1`` before import to force the pure-numpy
kernels. Numba is optional; when it is missing the numpy path is used.
"""

import os

_DISABLED = os.environ.get("DISPFLOW_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("disabled by DISPFLOW_DISABLE_NUMBA")
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    _njit = None
    HAS_NUMBA = False


def njit(func):
    """``numba.njit(cache=True)`` when available, otherwise identity."""
    if HAS_NUMBA:
        return _njit(cache=True, fastmath=False)(func)
    return func
