"""Kernel backend selection: numba-compiled or pure NumPy.

The hot per-timestep loops in :mod:`dualmem.kernels` are written once in
NumPy style and compiled with numba when available. Set

    DUALMEM_BACKEND=numpy   force the pure-NumPy fallback
    DUALMEM_BACKEND=numba   require numba (raise if it cannot be imported)
    DUALMEM_BACKEND=auto    default: numba if importable, else NumPy

Both paths execute the same statements in the same order, so results are
bit-identical across backends. ``fastmath`` stays off for that reason.
"""

import os

_VALID = ("auto", "numba", "numpy")
_choice = os.environ.get("DUALMEM_BACKEND", "auto").strip().lower()
if _choice not in _VALID:
    raise ValueError(f"DUALMEM_BACKEND must be one of {_VALID}, got {_choice!r}")

USING_NUMBA = False
if _choice != "numpy":
    try:
        import numba as _numba

        USING_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise
        USING_NUMBA = False


def jit(fn):
    """Compile with numba when active; return fn unchanged on the NumPy path."""
    if USING_NUMBA:
        return _numba.njit(cache=True, fastmath=False)(fn)
    return fn


def backend_name() -> str:
    return "numba" if USING_NUMBA else "numpy"
