"""Backend selection for the hot numeric kernels.

Two interchangeable implementations exist for every kernel: a numba
``@njit`` version and a vectorized pure-numpy version.  Selection is
controlled by the ``GMDKP_BACKEND`` environment variable:

* ``auto`` (default) -- numba when importable, numpy otherwise,
* ``numba``          -- force numba, error if it cannot be imported,
* ``numpy``          -- force the pure-numpy path.

The choice is made once at import time; tests and benchmarks can call
the per-backend functions directly regardless of the flag.
"""

import os
import warnings

_requested = os.environ.get("GMDKP_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(f"GMDKP_BACKEND must be auto|numba|numpy, got {_requested!r}")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


if _requested == "numba" and not HAS_NUMBA:
    raise ImportError("GMDKP_BACKEND=numba but numba is not importable")

if _requested == "auto" and not HAS_NUMBA:  # pragma: no cover
    warnings.warn("numba not available; falling back to the pure-numpy kernels")

USE_NUMBA = HAS_NUMBA if _requested == "auto" else (_requested == "numba")


def backend_name() -> str:
    """Name of the kernel backend in use ('numba' or 'numpy')."""
    return "numba" if USE_NUMBA else "numpy"
