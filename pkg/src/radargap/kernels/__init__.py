"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The active backend is chosen once at import time (see ``radargap._accel``).
Both backends stay importable so they can be compared directly.
"""

import numpy as np

from .._accel import USE_NUMBA
from . import _numpy as numpy_backend

if USE_NUMBA:
    from . import _numba as numba_backend

    _impl = numba_backend
else:  # pragma: no cover - depends on environment
    numba_backend = None
    _impl = numpy_backend

__all__ = [
    "ray_cast",
    "segments_blocked",
    "nearest_distances",
    "emd_uniform",
    "numpy_backend",
    "numba_backend",
]


def _f64(a, ndim):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim == 1 and ndim == 2:
        a = a.reshape(1, -1) if a.size else a.reshape(0, 5)
    return a


def ray_cast(origin, angles, rects, max_range):
    """Nearest ray/rectangle hits; see ``_numpy.ray_cast``."""
    return _impl.ray_cast(
        _f64(origin, 1), _f64(angles, 1), _f64(rects, 2).reshape(-1, 5), float(max_range)
    )


def segments_blocked(origin, points, rects):
    """Occlusion test for segments from ``origin``; see ``_numpy.segments_blocked``."""
    return _impl.segments_blocked(
        _f64(origin, 1), _f64(points, 2).reshape(-1, 2), _f64(rects, 2).reshape(-1, 5)
    )


def nearest_distances(X, Y):
    return _impl.nearest_distances(_f64(X, 2), _f64(Y, 2))


def emd_uniform(X, Y):
    return _impl.emd_uniform(_f64(X, 2), _f64(Y, 2))
