"""Numba/numpy backend selection.

Hot kernels (covariance assembly, scalar Bessel evaluation) are compiled
with numba when it is importable.  Setting ``TLRGEO_DISABLE_NUMBA=1``
forces the pure numpy/scipy fallback, which computes identical quantities
with vectorized array code.  ``benchmarks/compare_backends.py`` times the
two paths side by side.
"""

import os

DISABLE_FLAG = "TLRGEO_DISABLE_NUMBA"


def _numba_wanted() -> bool:
    return os.environ.get(DISABLE_FLAG, "0").strip() not in ("1", "true", "yes")


USING_NUMBA = False
if _numba_wanted():
    try:
        import numba  # noqa: F401

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False


def jit(func):
    """Compile ``func`` with numba when the numba backend is active.

    Under the numpy fallback the function is returned unchanged, so the
    same scalar source also serves as the (slow) pure-Python reference.
    """
    if USING_NUMBA:
        import numba

        return numba.njit(cache=True)(func)
    return func
