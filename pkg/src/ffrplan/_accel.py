"""Backend selection for the hot kernels.

``FFRPLAN_BACKEND=numpy`` forces the pure-numpy code paths; the default is
``numba`` whenever it can be imported.
"""
import os

BACKEND_ENV = "FFRPLAN_BACKEND"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


def _requested_backend():
    value = os.environ.get(BACKEND_ENV, "").strip().lower()
    if value in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    if value == "numba" and not HAVE_NUMBA:
        raise ImportError(f"{BACKEND_ENV}=numba but numba is not installed")
    return value


BACKEND = _requested_backend()
USE_NUMBA = BACKEND == "numba"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    Kernels are always compiled when numba exists so both paths stay
    testable side by side; ``USE_NUMBA`` only decides which one the public
    dispatchers call.
    """
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
