"""Linear assignment backend selection.

The compiled kernel (gotlab._lapjv, built from _lapjv.pyx) is used when the
extension imported cleanly; otherwise the NumPy implementation takes over.
Set GOTLAB_LAP_BACKEND=c or GOTLAB_LAP_BACKEND=numpy to force a backend
(useful for benchmarking); forcing "c" when the extension is missing raises.

Both backends expose the same contract: ``solve_lap(cost) -> (col_of_row,
u, v, total)`` with identical optimal cost and dual-feasible (u, v).
"""

from __future__ import annotations

import os

from . import lap_numpy

try:  # compiled extension is optional
    from . import _lapjv

    _HAVE_C = True
except ImportError:  # pragma: no cover - depends on build environment
    _lapjv = None
    _HAVE_C = False

__all__ = ["solve_lap", "backend_name", "available_backends"]

_FORCED = os.environ.get("GOTLAB_LAP_BACKEND", "").strip().lower()
if _FORCED == "c":
    if not _HAVE_C:
        raise ImportError(
            "GOTLAB_LAP_BACKEND=c but the compiled gotlab._lapjv extension "
            "is not available"
        )
    _IMPL = _lapjv.solve_lap
    _NAME = "c"
elif _FORCED == "numpy":
    _IMPL = lap_numpy.solve_lap
    _NAME = "numpy"
elif _FORCED:
    raise ValueError(
        f"GOTLAB_LAP_BACKEND={_FORCED!r} not recognized (use 'c' or 'numpy')"
    )
elif _HAVE_C:
    _IMPL = _lapjv.solve_lap
    _NAME = "c"
else:
    _IMPL = lap_numpy.solve_lap
    _NAME = "numpy"


def solve_lap(cost):
    """Solve the dense square assignment problem with the active backend."""
    return _IMPL(cost)


def backend_name() -> str:
    """Name of the backend in use: 'c' or 'numpy'."""
    return _NAME


def available_backends() -> tuple:
    """Backends importable in this environment."""
    return ("c", "numpy") if _HAVE_C else ("numpy",)
