"""Optional numba acceleration.

Set ``BOUQUET_LAB_BACKEND=numpy`` to run every kernel as plain Python/numpy.
"""
import os

BACKEND = os.environ.get("BOUQUET_LAB_BACKEND", "numba").strip().lower()

try:
    if BACKEND == "numpy":
        raise ImportError
    import numba as _nb

    HAVE_NUMBA = True
except ImportError:
    _nb = None
    HAVE_NUMBA = False
    BACKEND = "numpy"


def jit(fn=None, **kw):
    """``numba.njit`` when enabled, identity otherwise.

    The wrapped function keeps a ``py_func`` attribute either way so the
    benchmark can call the interpreted version directly.
    """

    def wrap(f):
        if HAVE_NUMBA:
            opts = {"cache": True, "nogil": True}
            opts.update(kw)
            return _nb.njit(**opts)(f)
        f.py_func = f
        return f

    return wrap(fn) if fn is not None else wrap
