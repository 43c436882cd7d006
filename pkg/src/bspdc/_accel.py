"""Numba switch.

Kernels are compiled with numba unless ``BSPDC_DISABLE_NUMBA`` is set to a
truthy value (``1``, ``true``, ``yes``) or numba cannot be imported, in which
case the pure-numpy implementations are used.
"""
import functools
import os

_FLAG = os.environ.get("BSPDC_DISABLE_NUMBA", "").strip().lower()

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None

HAS_NUMBA = nb is not None
USE_NUMBA = HAS_NUMBA and _FLAG not in ("1", "true", "yes", "on")

if HAS_NUMBA:
    njit = functools.partial(nb.njit, cache=False, nogil=True)
else:  # pragma: no cover
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def backend():
    return "numba" if USE_NUMBA else "numpy"
