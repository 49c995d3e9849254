"""Analytic tail approximations and thresholds for the pooled scan maximum.

The scan statistic is ``max over (s, tau)`` of ``sum_i g(U_i(s, tau))``
with ``tau`` ranging over ``[tau_min, tau_max]``.  Its null tail is
approximated through the exponential tilt of the per-sequence score:

    psi(theta) = log E[exp(theta * g(Z))],   Z standard normal.

For a level ``x`` the tilt ``theta`` solves ``psi'(theta) = x / N``; the
tail probability combines the large-deviation factor
``exp(-N (theta x/N - psi))`` with a prefactor built from the local drift
``mu = theta^2 E_theta[g'(Z)^2] / 2`` and the discrete overlap correction
``nu``.  Everything here is deterministic; Monte Carlo counterparts live
in :mod:`cnvscan.simulate`.

Moments of the tilted distribution come from closed forms (sum of
chi-squares) or composite Simpson quadrature in log space on a symmetric
grid whose half-width grows like ``(1 - theta/theta_max)**-0.5`` so the
tilted density's tails stay covered at strong tilts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import erf, ndtr

from .errors import (
    ApproximationClampWarning,
    ConfigError,
    ConvergenceFailure,
    InvalidWindow,
    TargetBelowMean,
    TargetUnreachable,
    TiltOutOfDomain,
)
from .statistic import StatisticKind, StatisticSpec, score_transform, score_transform_deriv

__all__ = [
    "TiltState",
    "tilt_state",
    "solve_tilt",
    "null_score_mean",
    "nu",
    "tail_probability",
    "threshold",
]

# Quadrature half-widths quantized so node tables can be cached; the
# largest width caps the usable tilt at theta_max * (1 - (12/96)^2).
_WIDTHS = (12, 17, 24, 34, 48, 68, 96)
_MIN_DECAY = (12.0 / 96.0) ** 2
_BASE_DENSITY = 8192 / 12.0  # Simpson intervals per unit half-width
_MAX_INTERVALS = 1 << 21
_SELF_TOL = 1e-10
_LOG_2PI = math.log(2.0 * math.pi)

# Interval count verified by grid-doubling, per (kind, p0, width).
_VERIFIED_M: dict[tuple, int] = {}


@dataclass(frozen=True)
class TiltState:
    """Cumulant data of the tilted score distribution at one tilt."""

    theta: float
    psi: float
    psi_dot: float
    psi_ddot: float
    gdot_sq: float  # E_theta[g'(Z)^2]

    @property
    def drift(self) -> float:
        """Local drift rate ``theta^2 * E_theta[g'(Z)^2] / 2``."""
        return 0.5 * self.theta * self.theta * self.gdot_sq


def nu(x):
    """Discrete-time overlap correction for scan maxima.

    Uses the rational approximation
    ``nu(x) = (2/x)(Phi(x/2) - 1/2) / ((x/2) Phi(x/2) + phi(x/2))``,
    evaluated through ``erf`` so small arguments do not cancel;
    ``nu(0) = 1`` and ``nu`` decreases toward zero.  Accepts scalars or
    arrays.
    """
    x = np.asarray(x, dtype=np.float64)
    half = 0.5 * x
    # (2/x)(Phi(x/2) - 1/2) == erf(x / (2 sqrt 2)) / x, smooth through 0
    with np.errstate(invalid="ignore", divide="ignore"):
        num = np.where(x > 0.0, erf(half / math.sqrt(2.0)) / np.where(x > 0.0, x, 1.0), 1.0 / math.sqrt(2.0 * math.pi))
    den = half * ndtr(half) + np.exp(-0.5 * half * half) / math.sqrt(2.0 * math.pi)
    out = num / den
    return float(out) if out.ndim == 0 else out


def _quantized_width(spec: StatisticSpec, theta: float) -> int:
    if theta < 0.0 or theta >= spec.theta_max:
        raise TiltOutOfDomain(f"tilt {theta} outside [0, {spec.theta_max})")
    decay = 1.0 - theta / spec.theta_max
    need = 12.0 / math.sqrt(decay)
    for w in _WIDTHS:
        if need <= w + 1e-9:
            return w
    raise TiltOutOfDomain(
        f"tilt {theta} too close to {spec.theta_max}: quadrature width {need:.1f} unsupported"
    )


@lru_cache(maxsize=32)
def _node_tables(kind_value: str, p0: float, width: int, m: int):
    """Simpson nodes for one (transform, width, interval-count) combination.

    Returns ``(g, gdot_sq, log_base)`` on ``m + 1`` nodes where
    ``log_base = log phi(z) + log(simpson weight)``.
    """
    spec = StatisticSpec(StatisticKind(kind_value), p0)
    z = np.linspace(-float(width), float(width), m + 1)
    h = 2.0 * width / m
    coef = np.ones(m + 1)
    coef[1:-1:2] = 4.0
    coef[2:-1:2] = 2.0
    g = score_transform(spec, z)
    gd = score_transform_deriv(spec, z)
    log_base = (-0.5 * z * z - 0.5 * _LOG_2PI) + np.log(coef * (h / 3.0))
    return g, gd * gd, log_base


def _moments_once(spec: StatisticSpec, theta: float, width: int, m: int):
    g, gd2, log_base = _node_tables(spec.kind.value, spec.p0, width, m)
    log_terms = theta * g + log_base
    c = log_terms.max()
    w = np.exp(log_terms - c)
    total = w.sum()
    psi = c + math.log(total)
    p = w / total
    eg = float(p @ g)
    eg2 = float(p @ (g * g))
    egd2 = float(p @ gd2)
    return psi, eg, eg2 - eg * eg, egd2


def _moments_quadrature(spec: StatisticSpec, theta: float):
    """Tilted moments by Simpson quadrature with grid-doubling validation.

    The first evaluation at a given width doubles the grid until four
    moment values agree to ``1e-10`` relative; later evaluations at that
    width reuse the verified interval count.
    """
    width = _quantized_width(spec, theta)
    key = (spec.kind.value, spec.p0, width)
    if key in _VERIFIED_M:
        return _moments_once(spec, theta, width, _VERIFIED_M[key])
    m = int(round(_BASE_DENSITY * width))
    m += m % 2
    prev = _moments_once(spec, theta, width, m)
    while m <= _MAX_INTERVALS:
        cur = _moments_once(spec, theta, width, 2 * m)
        ok = all(abs(a - b) <= _SELF_TOL * max(1.0, abs(a)) for a, b in zip(cur, prev))
        if ok:
            _VERIFIED_M[key] = 2 * m
            return cur
        m *= 2
        prev = cur
    raise ConvergenceFailure(f"quadrature did not stabilize at width {width}")


def _moments_closed_sumchisq(theta: float):
    if theta < 0.0 or theta >= 0.5:
        raise TiltOutOfDomain(f"tilt {theta} outside [0, 0.5)")
    d = 1.0 - 2.0 * theta
    # E_theta[(2z)^2] under the tilted variance 1/d
    return -0.5 * math.log(d), 1.0 / d, 2.0 / (d * d), 4.0 / d


def tilt_state(spec: StatisticSpec, theta: float, method: str = "auto") -> TiltState:
    """Cumulant function and derivatives of the tilted score at ``theta``.

    ``method`` is ``"auto"`` (closed form when available, else
    quadrature), ``"closed"`` (sum of chi-squares only), or
    ``"quadrature"``.
    """
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed" and spec.kind is not StatisticKind.SUM_CHISQ:
        raise ValueError("closed-form moments exist only for the sum-of-chi-squares score")
    if method == "quadrature" or (method == "auto" and spec.kind is not StatisticKind.SUM_CHISQ):
        psi, psi_dot, psi_ddot, gdot_sq = _moments_quadrature(spec, theta)
    else:
        psi, psi_dot, psi_ddot, gdot_sq = _moments_closed_sumchisq(theta)
    return TiltState(theta=theta, psi=psi, psi_dot=psi_dot, psi_ddot=psi_ddot, gdot_sq=gdot_sq)


def null_score_mean(spec: StatisticSpec, method: str = "auto") -> float:
    """Mean of ``g(Z)`` under the null, i.e. ``psi'(0)``."""
    return tilt_state(spec, 0.0, method).psi_dot


def _theta_cap(spec: StatisticSpec, method: str) -> float:
    if spec.kind is StatisticKind.SUM_CHISQ and method != "quadrature":
        return spec.theta_max * (1.0 - 1e-12)
    return spec.theta_max * (1.0 - _MIN_DECAY)


def solve_tilt(spec: StatisticSpec, target_mean: float, method: str = "auto") -> TiltState:
    """Find the tilt whose mean score ``psi'(theta)`` equals ``target_mean``.

    Raises :class:`TargetBelowMean` when the target does not exceed the
    null mean ``psi'(0)`` and :class:`TargetUnreachable` when no tilt in
    the supported domain reaches it.
    """
    base = null_score_mean(spec, method)
    if not target_mean > base:
        raise TargetBelowMean(
            f"target mean {target_mean} does not exceed the null score mean {base:.6g}"
        )
    if spec.kind is StatisticKind.SUM_CHISQ and method != "quadrature":
        # psi'(theta) = 1/(1 - 2 theta) inverts exactly
        return tilt_state(spec, 0.5 * (1.0 - 1.0 / target_mean), method)
    cap = _theta_cap(spec, method)
    if tilt_state(spec, cap, method).psi_dot < target_mean:
        raise TargetUnreachable(
            f"target mean {target_mean} not reachable within the tilt domain"
        )
    root = brentq(
        lambda th: tilt_state(spec, th, method).psi_dot - target_mean,
        0.0,
        cap,
        xtol=1e-14,
        maxiter=200,
    )
    return tilt_state(spec, float(root), method)


def _validate_scan_geometry(n_sequences: int, n_probes: int, tau_min: int, tau_max: int):
    if n_sequences < 1:
        raise ConfigError(f"need at least one sequence, got {n_sequences}")
    if n_probes < 2:
        raise ConfigError(f"need at least two probes, got {n_probes}")
    if not (1 <= tau_min <= tau_max < n_probes):
        raise InvalidWindow(
            f"window lengths must satisfy 1 <= tau_min <= tau_max < T, "
            f"got [{tau_min}, {tau_max}] with T={n_probes}"
        )


def _log_tail_from_state(
    spec: StatisticSpec,
    n_sequences: int,
    n_probes: int,
    tau_min: int,
    tau_max: int,
    state: TiltState,
    form: str,
) -> float:
    n = n_sequences
    level = n * state.psi_dot
    mu = state.drift
    nmu = n * mu
    log_pref = (
        -(state.theta * level - n * state.psi)
        - 0.5 * math.log(2.0 * math.pi * n * state.psi_ddot)
        - math.log(state.theta)
    )
    if tau_min == tau_max:
        form = "sum"  # the continuous version has no width to integrate over
    if form == "sum":
        taus = np.arange(tau_min, tau_max + 1, dtype=np.float64)
        terms = (n_probes - taus) * (nmu / taus) ** 2 * nu(np.sqrt(2.0 * nmu / taus)) ** 2
        body = float(terms.sum())
    else:
        lo = tau_min / n_probes
        hi = tau_max / n_probes

        def integrand(t):
            return nu(math.sqrt(2.0 * nmu / (n_probes * t))) ** 2 * (1.0 - t) / (t * t)

        body = nmu * nmu * quad(integrand, lo, hi, limit=200)[0]
    return log_pref + math.log(body)


def tail_probability(
    spec: StatisticSpec,
    n_sequences: int,
    n_probes: int,
    tau_min: int,
    tau_max: int,
    level: float,
    form: str = "sum",
    method: str = "auto",
) -> float:
    """Approximate ``P{max pooled score >= level}`` under the null.

    ``form`` selects the per-length sum (default) or its continuous
    integral version; the two agree to within a few percent for typical
    geometries.  The result is clamped to ``[0, 1]``; a clamp emits
    :class:`ApproximationClampWarning` since levels that far into the
    bulk are outside the approximation's regime.
    """
    if form not in ("sum", "integral"):
        raise ValueError(f"unknown form {form!r}")
    _validate_scan_geometry(n_sequences, n_probes, tau_min, tau_max)
    state = solve_tilt(spec, level / n_sequences, method)
    log_p = _log_tail_from_state(spec, n_sequences, n_probes, tau_min, tau_max, state, form)
    if log_p > 0.0:
        warnings.warn(
            f"tail approximation exceeded 1 at level {level}; clamped",
            ApproximationClampWarning,
            stacklevel=2,
        )
        return 1.0
    return math.exp(log_p)


def threshold(
    spec: StatisticSpec,
    n_sequences: int,
    n_probes: int,
    tau_min: int,
    tau_max: int,
    alpha: float,
    form: str = "sum",
    method: str = "auto",
) -> float:
    """Level whose approximate null tail probability equals ``alpha``.

    The tail formula vanishes at the null mean, peaks above one, then
    decreases; the root is taken on the decreasing branch, located by a
    tilt-space grid scan followed by bracketed root-finding on
    ``log p(theta) = log alpha``.
    """
    if form not in ("sum", "integral"):
        raise ValueError(f"unknown form {form!r}")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    _validate_scan_geometry(n_sequences, n_probes, tau_min, tau_max)

    def log_tail(theta: float) -> float:
        st = tilt_state(spec, theta, method)
        return _log_tail_from_state(spec, n_sequences, n_probes, tau_min, tau_max, st, form)

    cap = _theta_cap(spec, method)
    decays = np.geomspace(0.999, 1.0 - cap / spec.theta_max, 64)
    thetas = spec.theta_max * (1.0 - decays)
    log_ps = np.array([log_tail(th) for th in thetas])
    log_alpha = math.log(alpha)

    peak = int(np.argmax(log_ps))
    if log_ps[peak] < log_alpha:
        raise TargetUnreachable(
            f"tail approximation never reaches alpha={alpha} for this geometry"
        )
    below = np.nonzero(log_ps[peak:] < log_alpha)[0]
    if below.size == 0:
        raise ConvergenceFailure(
            f"no tilt in the supported domain brings the tail below alpha={alpha}"
        )
    j = peak + int(below[0])
    root = brentq(
        lambda th: log_tail(th) - log_alpha,
        thetas[j - 1],
        thetas[j],
        xtol=1e-13,
        maxiter=200,
    )
    return n_sequences * tilt_state(spec, float(root), method).psi_dot
