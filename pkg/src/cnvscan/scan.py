"""Window maximization, detection iteration, carrier calls, consistency.

The scan maximizes the pooled score over all windows ``(s, s+tau]`` with
``tau`` in ``[t0, t1]``, using per-sequence prefix sums so each window
costs O(N).  Detection iterates: maximize, test against the analytic
tail approximation, subtract the fitted shift of called carriers, rescan.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .backend import KIND_CODES, kernels
from .errors import (
    ApproximationClampWarning,
    ConfigError,
    InvalidWindow,
    TargetBelowMean,
    TargetUnreachable,
    UnknownSample,
)
from .significance import tail_probability
from .statistic import (
    EstimationMode,
    IntensityMatrix,
    SequenceBaseline,
    StatisticSpec,
    WindowScore,
    estimate_baseline,
    score_transform,
)

__all__ = [
    "ScanConfig",
    "Detection",
    "Pedigree",
    "ConsistencyReport",
    "scan_max",
    "detect",
    "call_carriers",
    "consistency_report",
]


@dataclass(frozen=True)
class ScanConfig:
    """Window range, statistic, and decision settings for one scan."""

    t0: int
    t1: int
    spec: StatisticSpec
    alpha: float = 0.05
    max_intervals: int = 5
    carrier_delta_min: float = 0.3
    estimation_mode: EstimationMode = EstimationMode.MLE
    threads: int = 1

    def __post_init__(self):
        if not (1 <= self.t0 <= self.t1):
            raise ConfigError(f"need 1 <= t0 <= t1, got t0={self.t0}, t1={self.t1}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.max_intervals < 1:
            raise ConfigError(f"max_intervals must be >= 1, got {self.max_intervals}")
        if not self.carrier_delta_min > 0.0:
            raise ConfigError(f"carrier_delta_min must be positive, got {self.carrier_delta_min}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")


@dataclass(frozen=True)
class Detection:
    """One called variant interval ``(tau1, tau2]`` with its evidence."""

    tau1: int
    tau2: int
    score: float
    p_value: float
    carriers: frozenset[int] = field(default_factory=frozenset)
    per_sample_u: tuple[float, ...] = ()


class ConsistencyReport(NamedTuple):
    total: int
    inconsistent: int


@dataclass(frozen=True)
class Pedigree:
    """Replicate pairs and child-parent-parent trios, by sample ID."""

    replicate_pairs: tuple[tuple[str, str], ...] = ()
    trios: tuple[tuple[str, str, str], ...] = ()

    def sample_ids(self) -> set[str]:
        ids: set[str] = set()
        for pair in self.replicate_pairs:
            ids.update(pair)
        for trio in self.trios:
            ids.update(trio)
        return ids


def _baseline_arrays(values: np.ndarray, mode: EstimationMode):
    baselines = [estimate_baseline(row, mode) for row in values]
    mean = np.array([b.mean for b in baselines])
    sd = np.array([b.sd for b in baselines])
    return mean, sd


def _prefix_matrix(values: np.ndarray) -> np.ndarray:
    n, t = values.shape
    prefix = np.zeros((t + 1, n))
    np.cumsum(values.T, axis=0, out=prefix[1:])
    return prefix


def _window_u(prefix, mean, sd, tau_scale, s: int, tau: int) -> np.ndarray:
    return ((prefix[s + tau] - prefix[s]) - tau * mean) / (sd * tau_scale[tau])


def _sweep(prefix, mean, sd, tau_scale, t0, t1, spec: StatisticSpec, threads: int):
    """Run the kernel sweep, partitioning the length range across threads.

    The reduce applies the same (value desc, s asc, tau asc) order as the
    kernels, so results are identical for every partitioning.
    """
    kind = KIND_CODES[spec.kind]
    if threads == 1 or t1 - t0 == 0:
        return kernels.sweep_max(prefix, mean, sd, tau_scale, t0, t1, kind, spec.p0)
    bounds = np.linspace(t0, t1 + 1, min(threads, t1 - t0 + 1) + 1).astype(int)
    jobs = [(int(a), int(b - 1)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
        results = list(
            pool.map(
                lambda ab: kernels.sweep_max(prefix, mean, sd, tau_scale, ab[0], ab[1], kind, spec.p0),
                jobs,
            )
        )
    best = results[0]
    for cand in results[1:]:
        if cand[0] > best[0] or (
            cand[0] == best[0]
            and (cand[1] < best[1] or (cand[1] == best[1] and cand[2] < best[2]))
        ):
            best = cand
    return best


def scan_max(
    data: IntensityMatrix,
    config: ScanConfig,
    baselines: Sequence[SequenceBaseline] | None = None,
) -> WindowScore:
    """Best window by pooled score over all admissible starts and lengths.

    Ties prefer the smallest start, then the smallest length; the result
    is identical for any thread count.  The reported value is recomputed
    at the winning window through the vectorized transform, so it does
    not depend on the active kernel backend.
    """
    values = data.values
    T = values.shape[1]
    if config.t1 >= T:
        raise InvalidWindow(f"t1={config.t1} must be < T={T}")
    if baselines is None:
        mean, sd = _baseline_arrays(values, config.estimation_mode)
    else:
        mean = np.array([b.mean for b in baselines])
        sd = np.array([b.sd for b in baselines])
    prefix = _prefix_matrix(values)
    taus = np.arange(config.t1 + 1, dtype=np.float64)
    tau_scale = np.ones(config.t1 + 1)
    tau_scale[1:] = np.sqrt(taus[1:] * (1.0 - taus[1:] / T))
    _, s, tau = _sweep(prefix, mean, sd, tau_scale, config.t0, config.t1, config.spec, config.threads)
    u = _window_u(prefix, mean, sd, tau_scale, s, tau)
    value = float(score_transform(config.spec, u).sum())
    return WindowScore(s=int(s), tau=int(tau), value=value)


def call_carriers(values, tau1: int, tau2: int, delta_min: float) -> frozenset[int]:
    """Samples whose inside-vs-outside median gap reaches ``delta_min``.

    ``values`` is the N x T array (or an IntensityMatrix); the interval
    is ``(tau1, tau2]`` in 0-based column indices, i.e. columns
    tau1..tau2-1.
    """
    if isinstance(values, IntensityMatrix):
        values = values.values
    values = np.asarray(values, dtype=np.float64)
    T = values.shape[1]
    if not (0 <= tau1 < tau2 <= T) or (tau1 == 0 and tau2 == T):
        raise InvalidWindow(f"interval ({tau1}, {tau2}] invalid for T={T}")
    inside = np.median(values[:, tau1:tau2], axis=1)
    outside = np.median(np.concatenate([values[:, :tau1], values[:, tau2:]], axis=1), axis=1)
    return frozenset(np.nonzero(np.abs(inside - outside) >= delta_min)[0].tolist())


def _interval_pvalue(spec, n, T, t0, t1, level) -> float:
    try:
        with warnings.catch_warnings():
            # a null-data maximum sits deep in the bulk where the tail
            # formula clamps to 1; that is routine here, not noteworthy
            warnings.simplefilter("ignore", ApproximationClampWarning)
            return tail_probability(spec, n, T, t0, t1, level, form="sum")
    except TargetBelowMean:
        return 1.0  # maximum below the null mean: certainly not significant
    except TargetUnreachable:
        return 0.0  # beyond the supported tilt domain: deeper than any representable tail


def detect(data: IntensityMatrix, config: ScanConfig) -> list[Detection]:
    """Iteratively find significant intervals.

    Each round maximizes the pooled score, converts it to a p-value, and
    stops when the p-value exceeds ``config.alpha`` or ``max_intervals``
    have been found.  After each detection the fitted median shift of
    every called carrier is subtracted inside the interval and baselines
    are re-estimated, so overlapping re-detections of the same interval
    are suppressed.  Output is sorted by position.
    """
    work = data.values.copy()
    n, T = work.shape
    detections: list[Detection] = []
    for _ in range(config.max_intervals):
        ws = scan_max(
            IntensityMatrix(work, sample_ids=list(data.sample_ids)),
            config,
        )
        p = _interval_pvalue(config.spec, n, T, config.t0, config.t1, ws.value)
        if p > config.alpha:
            break
        tau1, tau2 = ws.s, ws.s + ws.tau
        mean, sd = _baseline_arrays(work, config.estimation_mode)
        prefix = _prefix_matrix(work)
        taus = np.arange(config.t1 + 1, dtype=np.float64)
        tau_scale = np.ones(config.t1 + 1)
        tau_scale[1:] = np.sqrt(taus[1:] * (1.0 - taus[1:] / T))
        u = _window_u(prefix, mean, sd, tau_scale, tau1, ws.tau)
        carriers = call_carriers(work, tau1, tau2, config.carrier_delta_min)
        detections.append(
            Detection(
                tau1=tau1,
                tau2=tau2,
                score=ws.value,
                p_value=p,
                carriers=carriers,
                per_sample_u=tuple(float(v) for v in u),
            )
        )
        if not carriers:
            break  # nothing to subtract; rescanning would loop on this window
        inside = np.median(work[:, tau1:tau2], axis=1)
        outside = np.median(np.concatenate([work[:, :tau1], work[:, tau2:]], axis=1), axis=1)
        for i in carriers:
            work[i, tau1:tau2] -= inside[i] - outside[i]
    detections.sort(key=lambda d: (d.tau1, d.tau2))
    return detections


def _intervals_match(a, b, fraction: float) -> bool:
    lo = max(a[0], b[0])
    hi = min(a[1], b[1])
    overlap = hi - lo
    if overlap <= 0:
        return False
    if fraction <= 0.0:
        return True
    return overlap >= fraction * (a[1] - a[0]) and overlap >= fraction * (b[1] - b[0])


def _has_match(interval, candidates: Iterable, fraction: float) -> bool:
    return any(_intervals_match(interval, c, fraction) for c in candidates)


def consistency_report(
    detections: Mapping[str, Sequence[tuple[int, int]]],
    pedigree: Pedigree,
    overlap_fraction: float = 0.0,
) -> ConsistencyReport:
    """Count detections and rule violations across replicates and trios.

    A replicate-pair detection with no match in the partner is
    inconsistent; a child detection with no match in either parent is
    inconsistent.  ``overlap_fraction`` 0 accepts any overlap as a match;
    a positive value requires that reciprocal overlap fraction.  Each
    detection is counted at most once in ``inconsistent``.
    """
    for sample in pedigree.sample_ids():
        if sample not in detections:
            raise UnknownSample(f"pedigree references unknown sample {sample!r}")
    total = sum(len(detections[sample]) for sample in pedigree.sample_ids())
    flagged: set[tuple[str, int]] = set()
    for a, b in pedigree.replicate_pairs:
        for sample, partner in ((a, b), (b, a)):
            for idx, cnv in enumerate(detections[sample]):
                if not _has_match(cnv, detections[partner], overlap_fraction):
                    flagged.add((sample, idx))
    for child, parent1, parent2 in pedigree.trios:
        for idx, cnv in enumerate(detections[child]):
            if not _has_match(cnv, detections[parent1], overlap_fraction) and not _has_match(
                cnv, detections[parent2], overlap_fraction
            ):
                flagged.add((child, idx))
    return ConsistencyReport(total=total, inconsistent=len(flagged))
