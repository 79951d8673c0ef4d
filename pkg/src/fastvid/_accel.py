"""Backend selection for the hot kernels.

Set ``FASTVID_DISABLE_NUMBA=1`` to force the pure-numpy path; it is also used
automatically when numba cannot be imported.
"""

from __future__ import annotations

import os
import warnings

DISABLE_ENV = "FASTVID_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_disabled() -> bool:
    return os.environ.get(DISABLE_ENV, "").strip().lower() not in ("", "0", "false", "no")


def default_backend() -> str:
    if _env_disabled():
        return "numpy"
    if not HAVE_NUMBA:
        warnings.warn("numba not importable; using the numpy kernels", RuntimeWarning)
        return "numpy"
    return "numba"


def njit(fn):
    """``numba.njit`` with caching and GIL release, or identity without numba."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
