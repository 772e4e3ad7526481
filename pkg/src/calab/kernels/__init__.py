"""Kernel backend dispatch.

CALAB_KERNELS=numba forces the jit backend, CALAB_KERNELS=numpy forces the
vectorized fallback; unset (or "auto") prefers numba when importable.  Both
backends expose the same functions and are bit-identical (tested).
"""

import os

from . import numpy_backend

try:
    from . import numba_backend
except ImportError:  # pragma: no cover - environment without numba
    numba_backend = None

_choice = os.environ.get("CALAB_KERNELS", "auto").strip().lower() or "auto"
if _choice == "auto":
    _active = numba_backend if numba_backend is not None else numpy_backend
elif _choice == "numba":
    if numba_backend is None:
        raise ImportError("CALAB_KERNELS=numba but numba is not importable")
    _active = numba_backend
elif _choice == "numpy":
    _active = numpy_backend
else:
    raise ValueError(f"CALAB_KERNELS must be auto, numba or numpy, got {_choice!r}")

BACKEND = "numba" if _active is numba_backend else "numpy"


def get_backend(name: str):
    """Explicit backend module, for parity tests and benchmarks."""
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        if numba_backend is None:
            raise ImportError("numba backend unavailable")
        return numba_backend
    raise ValueError(name)


table_row = _active.table_row
erosion_row = _active.erosion_row
emission_row = _active.emission_row
isolation_row = _active.isolation_row
freeze_rows = _active.freeze_rows
rotation_row = _active.rotation_row
settled_planes = _active.settled_planes
