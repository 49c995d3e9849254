"""Shared oracles and builders for the test suite."""

import numpy as np
import pytest

from cnvscan import (
    IntensityMatrix,
    ScanConfig,
    StatisticKind,
    StatisticSpec,
    WindowScore,
    estimate_baseline,
    score_transform,
)

ALL_KINDS = (
    StatisticSpec(StatisticKind.SUM_CHISQ),
    StatisticSpec(StatisticKind.MIXTURE, p0=0.1),
    StatisticSpec(StatisticKind.MIXTURE, p0=1.0),
    StatisticSpec(StatisticKind.WEIGHTED, p0=0.3),
)


def brute_force_scan(data, config: ScanConfig) -> WindowScore:
    """Exhaustive double-loop window maximum, selected via tuple ordering.

    Enumeration, pruning (none) and tie-breaking are independent of the
    production sweep; the per-window score arithmetic is the same, so the
    agreement check is exact rather than approximate.
    """
    values = data.values if isinstance(data, IntensityMatrix) else np.asarray(data, float)
    n, T = values.shape
    baselines = [estimate_baseline(row, config.estimation_mode) for row in values]
    mean = np.array([b.mean for b in baselines])
    sd = np.array([b.sd for b in baselines])
    prefix = np.zeros((T + 1, n))
    np.cumsum(values.T, axis=0, out=prefix[1:])
    taus = np.arange(config.t1 + 1, dtype=np.float64)
    tau_scale = np.ones(config.t1 + 1)
    tau_scale[1:] = np.sqrt(taus[1:] * (1.0 - taus[1:] / T))
    best = None
    for s in range(T):
        for tau in range(config.t0, config.t1 + 1):
            t = s + tau
            if t > T:
                break
            u = ((prefix[t] - prefix[s]) - tau * mean) / (sd * tau_scale[tau])
            value = float(score_transform(config.spec, u).sum())
            key = (-value, s, tau)
            if best is None or key < best:
                best = key
    return WindowScore(s=best[1], tau=best[2], value=-best[0])


def random_matrix(seed: int, n: int, t: int) -> IntensityMatrix:
    rng = np.random.default_rng(seed)
    return IntensityMatrix(rng.standard_normal((n, t)))


@pytest.fixture
def oracle():
    return brute_force_scan
