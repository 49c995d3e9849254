"""Seeded Monte Carlo harnesses: null thresholds, OU linkage scans,
planted signals, and marginal power.

Every harness derives one RNG stream per repetition from
``default_rng([seed, rep])``, so results are reproducible and
independent of how repetitions might be partitioned across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import lfilter
from scipy.stats import ncx2

from .backend import KIND_CODES, kernels
from .errors import ConfigError, InvalidWindow
from .statistic import IntensityMatrix, StatisticKind, StatisticSpec, score_transform
from .scan import Detection

__all__ = [
    "SignPolicy",
    "PlantSpec",
    "OuConfig",
    "simulate_null_scores",
    "simulate_null_threshold",
    "ou_paths",
    "simulate_ou_scores",
    "simulate_ou_threshold",
    "plant_signal",
    "marginal_power",
    "power_curve",
]


class SignPolicy(Enum):
    ALL_POSITIVE = "all-positive"
    RANDOM_SIGN = "random-sign"


@dataclass(frozen=True)
class PlantSpec:
    """A variant interval to synthesize: where, how common, how strong."""

    tau1: int
    tau2: int
    carrier_fraction: float
    snr: float
    sign_policy: SignPolicy = SignPolicy.ALL_POSITIVE

    def __post_init__(self):
        if self.tau2 - self.tau1 < 1:
            raise ConfigError(f"interval ({self.tau1}, {self.tau2}] is empty")
        if not 0.0 < self.carrier_fraction <= 1.0:
            raise ConfigError(f"carrier_fraction must be in (0, 1], got {self.carrier_fraction}")
        if self.snr < 0.0:
            raise ConfigError(f"snr must be nonnegative, got {self.snr}")

    def n_carriers(self, n_sequences: int) -> int:
        return max(1, math.ceil(self.carrier_fraction * n_sequences))


@dataclass(frozen=True)
class OuConfig:
    """Grid geometry and autocorrelation of the linkage-style scan.

    Sequences are stationary AR(1) chains with lag-one correlation
    ``exp(-beta * spacing)`` sampled at ``floor(genome_length / spacing)``
    grid positions; the statistic pools the mixture transform across
    sequences at each position.
    """

    n_sequences: int
    genome_length: float
    spacing: float
    beta: float
    p0: float

    def __post_init__(self):
        if self.n_sequences < 1:
            raise ConfigError(f"need at least one sequence, got {self.n_sequences}")
        if self.spacing <= 0.0 or self.genome_length <= 0.0:
            raise ConfigError("genome_length and spacing must be positive")
        if self.grid_size < 1:
            raise ConfigError("grid must contain at least one position")
        if self.beta <= 0.0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if not 0.0 < self.p0 <= 1.0:
            raise ConfigError(f"p0 must be in (0, 1], got {self.p0}")

    @property
    def grid_size(self) -> int:
        return int(self.genome_length / self.spacing)

    @property
    def lag_correlation(self) -> float:
        return math.exp(-self.beta * self.spacing)


def _check_geometry(n_sequences: int, n_probes: int, t0: int, t1: int):
    if n_sequences < 1 or n_probes < 2:
        raise ConfigError(f"need N >= 1 and T >= 2, got {n_sequences} x {n_probes}")
    if not (1 <= t0 <= t1 < n_probes):
        raise InvalidWindow(f"need 1 <= t0 <= t1 < T, got [{t0}, {t1}] with T={n_probes}")


def simulate_null_scores(
    spec: StatisticSpec,
    n_sequences: int,
    n_probes: int,
    t0: int,
    t1: int,
    reps: int,
    seed: int,
    estimated: bool = False,
) -> np.ndarray:
    """Scan maxima of ``reps`` independent standard-normal matrices.

    By default window scores treat the baseline as known (mean 0, sd 1,
    scale ``sqrt(tau)``), matching the setting of the analytic tail
    approximation.  ``estimated=True`` instead re-estimates each row's
    baseline and applies the finite-sample ``1 - tau/T`` correction, as
    the production scan does.
    """
    _check_geometry(n_sequences, n_probes, t0, t1)
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    kind = KIND_CODES[spec.kind]
    taus = np.arange(t1 + 1, dtype=np.float64)
    known_scale = np.sqrt(np.maximum(taus, 1.0))
    est_scale = np.ones(t1 + 1)
    est_scale[1:] = np.sqrt(taus[1:] * (1.0 - taus[1:] / n_probes))
    zeros = np.zeros(n_sequences)
    ones = np.ones(n_sequences)
    scores = np.empty(reps)
    prefix = np.zeros((n_probes + 1, n_sequences))
    for rep in range(reps):
        rng = np.random.default_rng([seed, rep])
        y = rng.standard_normal((n_sequences, n_probes))
        np.cumsum(y.T, axis=0, out=prefix[1:])
        if estimated:
            mean = y.mean(axis=1)
            sd = y.std(axis=1)
            scores[rep] = kernels.sweep_max(prefix, mean, sd, est_scale, t0, t1, kind, spec.p0)[0]
        else:
            scores[rep] = kernels.sweep_max(prefix, zeros, ones, known_scale, t0, t1, kind, spec.p0)[0]
    return scores


def simulate_null_threshold(
    spec: StatisticSpec,
    n_sequences: int,
    n_probes: int,
    t0: int,
    t1: int,
    alpha: float,
    reps: int,
    seed: int,
    estimated: bool = False,
) -> float:
    """Empirical ``1 - alpha`` quantile of the null scan maximum."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    scores = simulate_null_scores(spec, n_sequences, n_probes, t0, t1, reps, seed, estimated)
    return float(np.quantile(scores, 1.0 - alpha))


def ou_paths(config: OuConfig, seed: int, rep: int = 0) -> np.ndarray:
    """One repetition's (N, J) matrix of stationary AR(1) sequences.

    Marginals are standard normal; lag-one correlation is
    ``config.lag_correlation``.  The chain is the exact discretization of
    an Ornstein-Uhlenbeck process on the grid.
    """
    rng = np.random.default_rng([seed, rep])
    rho = config.lag_correlation
    eps = rng.standard_normal((config.n_sequences, config.grid_size))
    # x_0 ~ N(0,1); x_j = rho x_{j-1} + sqrt(1-rho^2) eps_j
    eps[:, 1:] *= math.sqrt(1.0 - rho * rho)
    return lfilter([1.0], [1.0, -rho], eps, axis=1)


def simulate_ou_scores(config: OuConfig, reps: int, seed: int) -> np.ndarray:
    """Grid maxima of the pooled mixture score over AR(1) sequences."""
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    kind = KIND_CODES[StatisticKind.MIXTURE]
    scores = np.empty(reps)
    for rep in range(reps):
        u = ou_paths(config, seed, rep)
        scores[rep] = kernels.grid_max(np.ascontiguousarray(u.T), kind, config.p0)[0]
    return scores


def simulate_ou_threshold(config: OuConfig, alpha: float, reps: int, seed: int) -> float:
    """Empirical ``1 - alpha`` quantile of the OU grid-scan maximum."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    scores = simulate_ou_scores(config, reps, seed)
    return float(np.quantile(scores, 1.0 - alpha))


def plant_signal(
    base: IntensityMatrix | None,
    plant: PlantSpec,
    seed: int,
    shape: tuple[int, int] | None = None,
) -> tuple[IntensityMatrix, Detection]:
    """Add a shared mean shift to randomly chosen carrier rows.

    ``base`` provides the background data; pass ``None`` with ``shape``
    to synthesize standard-normal noise.  Returns the modified matrix and
    the ground truth as a Detection (score and p_value are NaN).
    """
    rng = np.random.default_rng(seed)
    if base is None:
        if shape is None:
            raise ConfigError("shape is required when no base matrix is given")
        values = rng.standard_normal(shape)
        sample_ids = None
    else:
        values = base.values.copy()
        sample_ids = list(base.sample_ids)
    n, T = values.shape
    if not (0 <= plant.tau1 < plant.tau2 <= T):
        raise InvalidWindow(f"interval ({plant.tau1}, {plant.tau2}] outside [0, {T}]")
    m = plant.n_carriers(n)
    carriers = np.sort(rng.choice(n, size=m, replace=False))
    deltas = np.full(m, plant.snr)
    if plant.sign_policy is SignPolicy.RANDOM_SIGN:
        deltas *= rng.choice([-1.0, 1.0], size=m)
    values[carriers, plant.tau1 : plant.tau2] += deltas[:, None]
    data = IntensityMatrix(values, sample_ids=sample_ids or [])
    truth = Detection(
        tau1=plant.tau1,
        tau2=plant.tau2,
        score=math.nan,
        p_value=math.nan,
        carriers=frozenset(int(c) for c in carriers),
    )
    return data, truth


def _carrier_shift_matrix(rng, m: int, snr: float, tau_len: int, sign_policy: SignPolicy):
    shift = snr * math.sqrt(tau_len)
    if sign_policy is SignPolicy.RANDOM_SIGN:
        return shift * rng.choice([-1.0, 1.0], size=m)
    return shift


def marginal_power(
    spec: StatisticSpec,
    n_sequences: int,
    tau_len: int,
    snr: float,
    p: float,
    threshold: float,
    reps: int,
    seed: int,
    sign_policy: SignPolicy = SignPolicy.ALL_POSITIVE,
    method: str = "mc",
) -> float:
    """Probability that the true window's pooled score exceeds ``threshold``.

    Simulates only the fixed true window (``tau_len`` x N observations
    per rep) with ``ceil(p * N)`` carriers shifted by ``snr``; a lower
    bound on scan power.  The pooled score is exchangeable across
    sequences, so carriers occupy the first rows without loss.
    ``method="exact"`` is available for the sum-of-chi-squares statistic,
    whose window score is noncentral chi-square.
    """
    if method not in ("mc", "exact"):
        raise ValueError(f"unknown method {method!r}")
    if tau_len < 1:
        raise ConfigError(f"tau_len must be >= 1, got {tau_len}")
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"p must be in (0, 1], got {p}")
    m = max(1, math.ceil(p * n_sequences))
    if method == "exact":
        if spec.kind is not StatisticKind.SUM_CHISQ:
            raise ValueError("exact marginal power exists only for the sum-of-chi-squares score")
        return float(ncx2.sf(threshold, df=n_sequences, nc=m * snr * snr * tau_len))
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    hits = 0
    inv_sqrt = 1.0 / math.sqrt(tau_len)
    for rep in range(reps):
        rng = np.random.default_rng([seed, rep])
        y = rng.standard_normal((n_sequences, tau_len))
        u = y.sum(axis=1) * inv_sqrt
        u[:m] += _carrier_shift_matrix(rng, m, snr, tau_len, sign_policy)
        if float(score_transform(spec, u).sum()) > threshold:
            hits += 1
    return hits / reps


def power_curve(
    spec: StatisticSpec,
    n_sequences: int,
    lengths,
    snr: float,
    p: float,
    threshold: float,
    reps: int,
    seed: int,
    sign_policy: SignPolicy = SignPolicy.ALL_POSITIVE,
) -> np.ndarray:
    """Marginal power across interval lengths with common random numbers.

    Each rep draws one noise panel covering the longest length; every
    grid length reuses its leading columns, so sampling noise is shared
    across the curve and monotonicity in length is visible at modest rep
    counts.
    """
    lengths = [int(v) for v in lengths]
    if not lengths or min(lengths) < 1:
        raise ConfigError("lengths must be a nonempty list of positive integers")
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"p must be in (0, 1], got {p}")
    m = max(1, math.ceil(p * n_sequences))
    lmax = max(lengths)
    hits = np.zeros(len(lengths), dtype=np.int64)
    for rep in range(reps):
        rng = np.random.default_rng([seed, rep])
        cum = np.cumsum(rng.standard_normal((n_sequences, lmax)), axis=1)
        signs = rng.choice([-1.0, 1.0], size=m) if sign_policy is SignPolicy.RANDOM_SIGN else 1.0
        for k, L in enumerate(lengths):
            u = cum[:, L - 1] / math.sqrt(L)
            u[:m] += signs * (snr * math.sqrt(L))
            if float(score_transform(spec, u).sum()) > threshold:
                hits[k] += 1
    return hits / reps
