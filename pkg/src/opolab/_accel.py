"""Optional numba acceleration.

Set ``OPOLAB_DISABLE_NUMBA=1`` to force the pure-numpy kernels, e.g. for
debugging or on platforms without numba.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is an install requirement
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("OPOLAB_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def njit(func):
    """Compile ``func`` with numba when available, otherwise return it as-is."""
    if NUMBA_AVAILABLE:
        return numba.njit(cache=True)(func)
    return func
