"""Kernel backend selection.

``COLLISION_NM_BACKEND=numpy`` forces the pure-numpy kernels; the default
(``numba``) JIT-compiles them and falls back to numpy when numba is missing.
"""

import logging
import os
from types import SimpleNamespace

from . import _kernels

log = logging.getLogger(__name__)

NUMPY = SimpleNamespace(
    name="numpy",
    collide_factors=_kernels.collide_factors_np,
    shift_window=_kernels.shift_window_np,
    qubit_trace_distance=_kernels.qubit_trace_distance_np,
    distance_series=_kernels.distance_series_np,
)

_numba = None


def numba_kernels():
    """The JIT kernel set, or None when numba is unavailable."""
    global _numba
    if _numba is None:
        try:
            collide, shift, td, series = _kernels._build_numba()
        except ImportError:
            log.warning("numba not importable; using numpy kernels")
            _numba = False
        else:
            _numba = SimpleNamespace(
                name="numba", collide_factors=collide, shift_window=shift,
                qubit_trace_distance=td, distance_series=series,
            )
    return _numba or None


def select(name=None):
    name = (name or os.environ.get("COLLISION_NM_BACKEND", "numba")).strip().lower()
    if name == "numpy":
        return NUMPY
    if name != "numba":
        raise ValueError(f"COLLISION_NM_BACKEND must be 'numba' or 'numpy', got {name!r}")
    return numba_kernels() or NUMPY


kernels = select()
