"""Optional numba acceleration.

JIT compilation is used when numba is importable and the environment
variable ``RCASSOC_NO_NUMBA`` is unset (or set to something falsy).
With JIT disabled every kernel dispatches to its vectorized numpy twin
(see ``kernels``), so the package works identically without numba.
"""

import os

__all__ = ["njit", "USE_NUMBA"]


def _disabled_by_env() -> bool:
    return os.environ.get("RCASSOC_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}


USE_NUMBA = False
if not _disabled_by_env():
    try:
        from numba import njit  # noqa: F401

        USE_NUMBA = True
    except ImportError:  # pragma: no cover - depends on environment
        pass

if not USE_NUMBA:

    def njit(*args, **kwargs):
        """Stand-in for numba.njit that leaves the function untouched."""
        if args and callable(args[0]):
            return args[0]

        def wrapper(fn):
            return fn

        return wrapper
