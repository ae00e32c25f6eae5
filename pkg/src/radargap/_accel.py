"""Backend selection for the hot kernels.

Set ``RADARGAP_DISABLE_NUMBA=1`` to force the pure-numpy path, e.g. when
numba is missing or when debugging a kernel.
"""

import os

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

_FLAG = os.environ.get("RADARGAP_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("1", "true", "yes", "on")


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
