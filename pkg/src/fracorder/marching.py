"""Kernel selection for the time-marching loop.

The compiled extension is used when available; the pure NumPy fallback
gives identical results (to rounding) and is forced by setting the
environment variable FRACORDER_PURE_PY=1 before import.
"""

from __future__ import annotations

import os

from . import _march_py
from .marching_errors import NumericalBlowUpError, StepSolveError

__all__ = ["march", "kernel_name", "NumericalBlowUpError", "StepSolveError"]

if os.environ.get("FRACORDER_PURE_PY") == "1":
    _impl = _march_py
else:
    try:
        from . import _march as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _march_py

march = _impl.march


def kernel_name() -> str:
    """Either 'compiled' or 'python'."""
    return "compiled" if _impl.__name__.endswith("._march") else "python"
