"""Selects the scan kernel implementation at import time.

The compiled extension is preferred; the pure-NumPy fallback is used when
the extension is missing or when ``CNVSCAN_PURE_PYTHON`` is set to a
non-empty value.  Both expose the same functions (``sweep_max``,
``grid_max``, ``transform``) with identical contracts.
"""

from __future__ import annotations

import os

from .statistic import StatisticKind

if os.environ.get("CNVSCAN_PURE_PYTHON"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as kernels

BACKEND: str = kernels.IMPLEMENTATION

KIND_CODES = {
    StatisticKind.SUM_CHISQ: 0,
    StatisticKind.MIXTURE: 1,
    StatisticKind.WEIGHTED: 2,
}
