"""Per-window score transforms and standardized window statistics.

A scan pools evidence across sequences by applying an even transform to
each sequence's standardized window z-score and summing.  Three transforms
are supported:

* ``SUM_CHISQ``: the identity on squared z-scores, ``z**2``.  Pooling gives
  a sum of chi-squares, the generalized likelihood ratio when every
  sequence may shift.
* ``MIXTURE``: ``log(1 - p0 + p0 * exp(z**2 / 2))``, the likelihood ratio
  when each sequence independently carries the shift with prior
  probability ``p0``.  Soft-thresholds weak sequences toward zero.
* ``WEIGHTED``: ``w(z**2) * z**2 / 2`` with posterior-odds weight
  ``w(x) = exp(x/2) / (odds + exp(x/2))``, ``odds = (1 - p0)/p0``.

Both mixture and weighted transforms reduce to ``z**2 / 2`` at ``p0 = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateRow, InvalidWindow

# Above this value of z**2/2 the mixture transform switches to its
# log-sum form, well before exp(z**2/2) can overflow.
_EXP_GUARD = 450.0


class StatisticKind(Enum):
    SUM_CHISQ = "sumchisq"
    MIXTURE = "mixture"
    WEIGHTED = "weighted"


class EstimationMode(Enum):
    MLE = "mle"
    ROBUST = "robust"


@dataclass(frozen=True)
class StatisticSpec:
    """Which pooled transform is in force, with its carrier prior.

    ``p0`` is ignored for ``SUM_CHISQ`` (kept at 1).  ``theta_max`` is the
    open upper endpoint of the exponential-tilt domain: the transform grows
    like ``z**2`` (sum of chi-squares) or ``z**2 / 2`` (mixture, weighted),
    so the tilted Gaussian integral diverges at 1/2 or 1 respectively.
    """

    kind: StatisticKind
    p0: float = 1.0

    def __post_init__(self):
        if self.kind is StatisticKind.SUM_CHISQ:
            object.__setattr__(self, "p0", 1.0)
        if not 0.0 < self.p0 <= 1.0:
            raise ValueError(f"p0 must be in (0, 1], got {self.p0}")

    @property
    def theta_max(self) -> float:
        return 0.5 if self.kind is StatisticKind.SUM_CHISQ else 1.0

    @property
    def prior_odds(self) -> float:
        """(1 - p0) / p0, the prior odds against a sequence carrying."""
        return (1.0 - self.p0) / self.p0


@dataclass(frozen=True)
class SequenceBaseline:
    """Per-sequence location and scale used to standardize window sums."""

    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0.0:
            raise DegenerateRow(f"baseline sd must be positive, got {self.sd}")


@dataclass(frozen=True)
class WindowScore:
    """Pooled score of the window ``(s, s + tau]``."""

    s: int
    tau: int
    value: float


@dataclass
class IntensityMatrix:
    """N aligned sequences of T probe intensities.

    Rows are samples, columns are ordered probe locations.  Values must be
    finite; probe positions default to ``1..T``.
    """

    values: np.ndarray
    sample_ids: list[str] = field(default_factory=list)
    probe_positions: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D array (samples x probes)")
        n, t = self.values.shape
        if n < 1 or t < 2:
            raise ValueError(f"need N >= 1 and T >= 2, got {n} x {t}")
        if not np.isfinite(self.values).all():
            raise ValueError("values contain NaN or Inf")
        if not self.sample_ids:
            self.sample_ids = [f"S{i}" for i in range(n)]
        if len(self.sample_ids) != n:
            raise ValueError("sample_ids length does not match row count")
        if self.probe_positions is None:
            self.probe_positions = np.arange(1, t + 1, dtype=np.int64)
        else:
            self.probe_positions = np.asarray(self.probe_positions, dtype=np.int64)
            if self.probe_positions.shape != (t,):
                raise ValueError("probe_positions length does not match column count")
            if np.any(np.diff(self.probe_positions) <= 0):
                raise ValueError("probe_positions must be strictly increasing")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_probes(self) -> int:
        return self.values.shape[1]


def score_transform(spec: StatisticSpec, z):
    """Evaluate the pooled-score transform at standardized score(s) ``z``.

    Even in ``z`` and nonnegative.  The mixture transform is evaluated in
    log-sum form for large ``|z|`` so no intermediate overflows occur.
    Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=np.float64)
    if spec.kind is StatisticKind.SUM_CHISQ:
        out = z * z
    elif spec.kind is StatisticKind.MIXTURE:
        x = 0.5 * z * z
        if spec.p0 == 1.0:
            out = x
        else:
            out = np.where(
                x <= _EXP_GUARD,
                np.log1p(spec.p0 * np.expm1(np.minimum(x, _EXP_GUARD))),
                x + np.log(spec.p0 + (1.0 - spec.p0) * np.exp(-np.minimum(x, 745.0))),
            )
    else:
        x = 0.5 * z * z
        # w(2x) * x with w = 1 / (1 + odds * exp(-x)); never overflows
        out = x / (1.0 + spec.prior_odds * np.exp(-x))
    return float(out) if out.ndim == 0 else out


def score_transform_deriv(spec: StatisticSpec, z):
    """Derivative of :func:`score_transform` with respect to ``z`` (odd in z)."""
    z = np.asarray(z, dtype=np.float64)
    if spec.kind is StatisticKind.SUM_CHISQ:
        out = 2.0 * z
    elif spec.kind is StatisticKind.MIXTURE:
        # z * w(z^2): posterior carrier weight times z
        w = 1.0 / (1.0 + spec.prior_odds * np.exp(-np.minimum(0.5 * z * z, 745.0)))
        out = z * w
    else:
        x = 0.5 * z * z
        w = 1.0 / (1.0 + spec.prior_odds * np.exp(-np.minimum(x, 745.0)))
        out = z * w * (1.0 + x * (1.0 - w))
    return float(out) if out.ndim == 0 else out


def estimate_baseline(row, mode: EstimationMode = EstimationMode.MLE) -> SequenceBaseline:
    """Estimate a sequence's baseline mean and scale.

    ``MLE`` uses the row mean and the maximum-likelihood standard deviation
    (normalized by T).  ``ROBUST`` uses the median and half the 16%-84%
    inter-quantile spread, which equals one sd for Gaussian rows.

    Raises :class:`DegenerateRow` for constant rows.
    """
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or row.size < 2:
        raise ValueError("row must be 1-D with at least two entries")
    if mode is EstimationMode.MLE:
        mean = float(row.mean())
        sd = float(np.sqrt(np.mean((row - mean) ** 2)))
    else:
        mean = float(np.median(row))
        q16, q84 = np.quantile(row, [0.16, 0.84])
        sd = float(0.5 * (q84 - q16))
    if sd <= 0.0:
        raise DegenerateRow("row has zero spread")
    return SequenceBaseline(mean=mean, sd=sd)


def window_zscore(row, baseline: SequenceBaseline, s: int, t: int) -> float:
    """Standardized score of the window ``(s, t]`` against the row baseline.

    Computes ``(S_t - S_s - (t - s) * mean) / (sd * sqrt((t-s) (1 - (t-s)/T)))``
    where ``S`` are partial sums of the row.  Under the null with the
    baseline estimated from the full row this has variance one.

    Raises :class:`InvalidWindow` unless ``0 <= s < t <= T`` and ``t - s < T``.
    """
    row = np.asarray(row, dtype=np.float64)
    T = row.size
    length = t - s
    if not (0 <= s < t <= T) or length >= T:
        raise InvalidWindow(f"window ({s}, {t}] invalid for row of length {T}")
    total = float(row[s:t].sum())
    scale = baseline.sd * np.sqrt(length * (1.0 - length / T))
    return (total - length * baseline.mean) / scale


def window_zscore_known(row, s: int, t: int) -> float:
    """Window score with the baseline treated as exactly known (0, 1).

    The Monte Carlo harnesses use this form: the window sum divided by the
    square root of its length, without the finite-T correction factor.
    """
    row = np.asarray(row, dtype=np.float64)
    T = row.size
    if not (0 <= s < t <= T):
        raise InvalidWindow(f"window ({s}, {t}] invalid for row of length {T}")
    return float(row[s:t].sum()) / np.sqrt(t - s)


def pooled_score(spec: StatisticSpec, u_values) -> float:
    """Sum the transform over per-sequence standardized scores."""
    u = np.asarray(u_values, dtype=np.float64)
    return float(np.sum(score_transform(spec, u)))
