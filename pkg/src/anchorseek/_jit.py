"""Accelerator selection.

Hot loops live in :mod:`anchorseek.kernels`, which ships two backends: numba
``@njit`` loops and vectorised numpy. The numba backend is used when numba
imports cleanly and ``ANCHORSEEK_DISABLE_JIT`` is unset or falsy.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}


def _jit_requested():
    return os.environ.get("ANCHORSEEK_DISABLE_JIT", "").strip().lower() in _FALSY


try:  # pragma: no cover - exercised implicitly by the import
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and _jit_requested()


def thread_cap():
    """Worker count allowed by ``ANCHORSEEK_THREADS`` (default 1)."""
    raw = os.environ.get("ANCHORSEEK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
