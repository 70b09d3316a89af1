"""Numba switch.

Set ``TRANSFERDYN_DISABLE_NUMBA=1`` to run every kernel as plain Python over
numpy arrays (useful for debugging and for the exact rational backend, which
always uses the Python path).
"""

import os

_FLAG = os.environ.get("TRANSFERDYN_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

NUMBA_ENABLED = (_numba is not None) and not DISABLED


def njit(func=None, **kwargs):
    """``numba.njit`` when enabled, identity otherwise.

    The undecorated function is always reachable as ``.py_func``.
    """
    kwargs.setdefault("cache", True)

    def wrap(f):
        if NUMBA_ENABLED:
            compiled = _numba.njit(**kwargs)(f)
            return compiled
        f.py_func = f
        return f

    if func is not None:
        return wrap(func)
    return wrap


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "python"
