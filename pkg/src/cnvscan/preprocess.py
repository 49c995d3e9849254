"""Normalization pipeline for raw intensity matrices.

Three steps: center each sample at its median, remove the best rank-1
component (array-wide artifact trends dominate total variation), and
standardize each probe so its 16%-84% spread matches a standard normal.
Diagnostic emitters produce QQ and autocorrelation tables for eyeballing
residual normality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, ConvergenceFailure
from .statistic import IntensityMatrix

__all__ = [
    "PreprocessReport",
    "DiagnosticTables",
    "median_center",
    "leading_component",
    "remove_rank1",
    "probe_standardize",
    "diagnostics",
    "pipeline",
]

# relative sigma change below this over several iterations counts as a
# plateau: the leading singular values are effectively tied and any unit
# vector in their span deflates equally well
_PLATEAU_RTOL = 1e-13
_PLATEAU_RUNS = 10


@dataclass(frozen=True)
class PreprocessReport:
    """What the pipeline measured and removed."""

    per_sample_medians: np.ndarray
    leading_singular_value: float
    singular_value_ratio: float
    per_probe_scale: np.ndarray
    flagged_probes: np.ndarray


@dataclass(frozen=True)
class DiagnosticTables:
    """Plot-ready QQ and autocorrelation tables for one sample."""

    qq_points: np.ndarray  # (n, 2): theoretical, observed
    region_qq_points: np.ndarray | None
    acf_values: np.ndarray  # lags 1..max_lag


def median_center(x) -> np.ndarray:
    """Subtract each row's median; output rows have median zero."""
    x = np.asarray(x, dtype=np.float64)
    return x - np.median(x, axis=1, keepdims=True)


def leading_component(x, tol: float = 1e-10, max_iter: int = 2000,
                      plateau_rtol: float = _PLATEAU_RTOL):
    """Leading singular triple ``(sigma, u, v)`` by power iteration.

    Accepts a plateau in sigma as converged: when the top singular values
    are (numerically) tied the iterate stops rotating meaningfully and
    any unit vector of the leading span deflates equally well.  The
    returned triple always satisfies ``u = x @ v / sigma`` exactly, which
    makes the deflation's Pythagorean identity hold to rounding error.
    """
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1)
    if not norms.any():
        n, t = x.shape
        u = np.zeros(n)
        v = np.zeros(t)
        u[0] = 1.0
        v[0] = 1.0
        return 0.0, u, v
    v = x[int(np.argmax(norms))].copy()
    v /= np.linalg.norm(v)
    sigma_prev = 0.0
    stall = 0
    for _ in range(max_iter):
        u = x @ v
        u /= np.linalg.norm(u)
        w = x.T @ u
        sigma = float(np.linalg.norm(w))
        w /= sigma
        delta = float(np.linalg.norm(w - v))
        v = w
        if delta <= tol:
            break
        if abs(sigma - sigma_prev) <= plateau_rtol * sigma:
            stall += 1
            if stall >= _PLATEAU_RUNS:
                break
        else:
            stall = 0
        sigma_prev = sigma
    else:
        raise ConvergenceFailure(
            f"power iteration did not converge in {max_iter} iterations"
        )
    u = x @ v
    sigma = float(np.linalg.norm(u))
    u = u / sigma if sigma > 0.0 else u
    return sigma, u, v


def remove_rank1(x, tol: float = 1e-10, max_iter: int = 2000):
    """Deflate the best rank-1 approximation; returns (residual, (sigma, u, v))."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 2:
        raise ConfigError("rank-1 removal needs at least two samples")
    sigma, u, v = leading_component(x, tol=tol, max_iter=max_iter)
    residual = x - sigma * np.outer(u, v)
    return residual, (sigma, u, v)


def probe_standardize(x, scale_floor: float = 1e-6):
    """Scale each probe column by half its 16%-84% spread.

    Columns whose spread falls below ``scale_floor`` pass through
    unscaled and are flagged.  Returns ``(y, d, flagged)``.
    """
    x = np.asarray(x, dtype=np.float64)
    q16, q84 = np.quantile(x, [0.16, 0.84], axis=0)
    d = 0.5 * (q84 - q16)
    flagged = d < scale_floor
    y = x / np.where(flagged, 1.0, d)
    return y, d, flagged


def diagnostics(y, sample: int, region: tuple[int, int] | None = None, max_lag: int = 50) -> DiagnosticTables:
    """QQ points against the standard normal and the autocorrelation function."""
    if isinstance(y, IntensityMatrix):
        y = y.values
    y = np.asarray(y, dtype=np.float64)
    if not 0 <= sample < y.shape[0]:
        raise ConfigError(f"sample index {sample} out of range")
    row = y[sample]

    def qq(values: np.ndarray) -> np.ndarray:
        n = values.size
        theoretical = ndtri((np.arange(1, n + 1) - 0.5) / n)
        return np.column_stack([theoretical, np.sort(values)])

    region_qq = None
    if region is not None:
        lo, hi = region
        if not 0 <= lo < hi <= row.size:
            raise ConfigError(f"region ({lo}, {hi}] invalid for T={row.size}")
        region_qq = qq(row[lo:hi])
    centered = row - row.mean()
    denom = float(centered @ centered)
    lags = min(max_lag, row.size - 1)
    acf = np.array([float(centered[:-k] @ centered[k:]) / denom for k in range(1, lags + 1)])
    return DiagnosticTables(qq_points=qq(row), region_qq_points=region_qq, acf_values=acf)


def pipeline(data, scale_floor: float = 1e-6, tol: float = 1e-10):
    """Run all three steps; returns the cleaned matrix and a report."""
    if isinstance(data, IntensityMatrix):
        values = data.values
        sample_ids = list(data.sample_ids)
        positions = data.probe_positions
    else:
        values = np.asarray(data, dtype=np.float64)
        sample_ids = []
        positions = None
    medians = np.median(values, axis=1)
    centered = values - medians[:, None]
    residual, (sigma1, _, _) = remove_rank1(centered, tol=tol)
    # The residual spectrum is usually gapless noise, so the ratio probe
    # only needs a few digits; a loose plateau keeps it cheap and robust.
    try:
        sigma2 = leading_component(residual, tol=tol, max_iter=500, plateau_rtol=1e-6)[0]
    except ConvergenceFailure:
        sigma2 = float("nan")
    y, d, flagged = probe_standardize(residual, scale_floor)
    report = PreprocessReport(
        per_sample_medians=medians,
        leading_singular_value=sigma1,
        singular_value_ratio=sigma1 / sigma2 if sigma2 else float("inf"),
        per_probe_scale=d,
        flagged_probes=flagged,
    )
    return IntensityMatrix(y, sample_ids=sample_ids, probe_positions=positions), report
