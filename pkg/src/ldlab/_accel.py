"""Backend switch for the compiled kernels.

The hot loops in :mod:`ldlab.kernels` exist twice: a numba ``@njit`` version
and a vectorised numpy version.  The numba path is used when numba imports
cleanly and the environment variable ``LDLAB_DISABLE_NUMBA`` is unset (or set
to ``0``/``false``).  Both paths consume the same pre-drawn random numbers, so
switching backends does not change results beyond floating-point summation
order.
"""
from __future__ import annotations

import os

ENV_FLAG = "LDLAB_DISABLE_NUMBA"


def _env_disables() -> bool:
    value = os.environ.get(ENV_FLAG, "").strip().lower()
    return value not in ("", "0", "false", "no", "off")


try:  # pragma: no cover - exercised implicitly
    import numba  # noqa: F401
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def use_numba() -> bool:
    """Return True when the numba kernels should be used."""
    return NUMBA_AVAILABLE and not _env_disables()


def backend_name() -> str:
    return "numba" if use_numba() else "numpy"
