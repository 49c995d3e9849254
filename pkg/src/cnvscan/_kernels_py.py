"""Pure-NumPy scan kernels, API-identical to the compiled ``_kernels``.

Used when the compiled extension is unavailable or explicitly disabled
via ``CNVSCAN_PURE_PYTHON``.  Results match the compiled kernels to
within a few ulp (floating-point library differences in ``exp``); window
bookkeeping and tie-breaking are identical.
"""

from __future__ import annotations

import numpy as np

from .statistic import StatisticKind, StatisticSpec, score_transform

IMPLEMENTATION = "python"

_KINDS = {0: StatisticKind.SUM_CHISQ, 1: StatisticKind.MIXTURE, 2: StatisticKind.WEIGHTED}


def _spec(kind: int, p0: float) -> StatisticSpec:
    return StatisticSpec(_KINDS[kind], p0 if kind else 1.0)


def transform(z, kind: int, p0: float):
    """Elementwise pooled-score transform; returns a new array."""
    return np.asarray(score_transform(_spec(kind, p0), np.asarray(z, dtype=np.float64)))


def sweep_max(prefix, mean, sd, tau_scale, tau_lo, tau_hi, kind: int, p0: float):
    """Maximize the pooled window score over starts and lengths.

    Same contract as the compiled version: returns ``(value, s, tau)``
    with ties broken toward smaller ``s``, then smaller ``tau``.
    """
    prefix = np.asarray(prefix, dtype=np.float64)
    T = prefix.shape[0] - 1
    if tau_lo < 1 or tau_hi > T - 1 or tau_lo > tau_hi:
        raise ValueError("invalid window-length range")
    spec = _spec(kind, p0)
    mean = np.asarray(mean, dtype=np.float64)
    sd = np.asarray(sd, dtype=np.float64)
    best = -np.inf
    best_s = -1
    best_tau = -1
    for tau in range(tau_lo, tau_hi + 1):
        u = ((prefix[tau:] - prefix[:-tau]) - tau * mean) / (sd * tau_scale[tau])
        vals = score_transform(spec, u).sum(axis=1)
        s = int(np.argmax(vals))  # first occurrence: smallest s at this tau
        v = float(vals[s])
        if v > best or (v == best and (s < best_s or (s == best_s and tau < best_tau))):
            best = v
            best_s = s
            best_tau = tau
    return best, best_s, best_tau


def grid_max(u, kind: int, p0: float):
    """Maximize ``sum_i g(u[j, i])`` over grid rows ``j``; ties prefer smaller ``j``."""
    u = np.asarray(u, dtype=np.float64)
    vals = score_transform(_spec(kind, p0), u).sum(axis=1)
    j = int(np.argmax(vals))
    return float(vals[j]), j
