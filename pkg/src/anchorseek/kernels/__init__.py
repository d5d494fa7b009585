"""Hot kernels, dispatched to numba or numpy by ``ANCHORSEEK_DISABLE_JIT``."""

from .._jit import USE_JIT
from . import _numpy

if USE_JIT:
    from . import _numba as backend
else:
    backend = _numpy

BACKEND = "numba" if USE_JIT else "numpy"

ACCEPTED, OUTER, INNER, QUERIES, SAMPLES = range(5)

descend = backend.descend
descend_rows = backend.descend_rows
update_path = backend.update_path
gather = backend.gather
combo_entries = backend.combo_entries
combo_reject = backend.combo_reject

__all__ = [
    "BACKEND", "backend", "descend", "descend_rows", "update_path", "gather",
    "combo_entries", "combo_reject",
]
