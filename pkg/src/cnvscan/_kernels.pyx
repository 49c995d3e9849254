# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scan kernels: pooled window sweep and pooled grid maximum.

Mirrors the API of ``_kernels_py`` exactly; either module can back
:mod:`cnvscan.backend`.  Scores are computed per window as
``sum_i g(((P[s+tau,i] - P[s,i]) - tau*mean[i]) / (sd[i] * tau_scale[tau]))``
from prefix sums ``P``, so arithmetic matches the vectorized fallback up
to floating-point library differences of at most a few ulp.

The maximization prunes with a certified upper bound: a tabulated chord
interpolant of g (which can only over-estimate, up to a measured margin)
screens each window in one cheap pass, and only windows whose bound
reaches the running maximum get the exact transcendental evaluation.
Pruning cannot change the result: bounds never fall below the true
score, so contenders and exact ties are always evaluated exactly.
"""

from libc.math cimport INFINITY, exp, expm1, log, log1p

import numpy as np

IMPLEMENTATION = "cython"

# kind codes shared with the fallback: 0 sum-chi-sq, 1 mixture, 2 weighted
cdef double _EXP_GUARD = 450.0

# chord tables for the pruning bound, over x = z*z/2 in [0, _TAB_XMAX];
# beyond the table g(x) <= x serves as the bound
cdef double _TAB_XMAX = 64.0
cdef Py_ssize_t _TAB_CELLS = 4096
cdef double _TAB_INV_DX = _TAB_CELLS / _TAB_XMAX

_TABLES = {}


cdef inline double _g_from_x(double x, int kind, double p0, double odds) noexcept nogil:
    # g expressed through x = z*z/2; scaling by powers of two commutes
    # with rounding, so this matches g evaluated from z bit for bit
    if kind == 0:
        return 2.0 * x
    if kind == 1:
        if p0 == 1.0:
            return x
        if x <= _EXP_GUARD:
            return log1p(p0 * expm1(x))
        return x + log(p0 + (1.0 - p0) * exp(-x))
    return x / (1.0 + odds * exp(-x))


cdef inline double _g(double z, int kind, double p0, double odds) noexcept nogil:
    return _g_from_x(0.5 * z * z, kind, p0, odds)


def _g_nodes(double[::1] xs, int kind, double p0):
    """Exact transform values on a grid of x = z*z/2 (table construction)."""
    cdef Py_ssize_t k, n = xs.shape[0]
    cdef double odds = (1.0 - p0) / p0
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    for k in range(n):
        ov[k] = _g_from_x(xs[k], kind, p0, odds)
    return out


def _bound_table(int kind, double p0):
    """Chord-interpolation table and certified per-element margin for g."""
    key = (kind, p0)
    cached = _TABLES.get(key)
    if cached is None:
        xs = np.linspace(0.0, _TAB_XMAX, _TAB_CELLS + 1)
        g = _g_nodes(xs, kind, p0)
        mids = 0.5 * (xs[:-1] + xs[1:])
        gm = _g_nodes(mids, kind, p0)
        # chords over-estimate convex stretches; measure any shortfall
        shortfall = float(np.max(gm - 0.5 * (g[:-1] + g[1:])))
        eps = 2.0 * max(shortfall, 0.0) + 1e-9
        cached = (g, eps)
        _TABLES[key] = cached
    return cached


def transform(double[::1] z, int kind, double p0):
    """Elementwise pooled-score transform; returns a new array."""
    cdef Py_ssize_t k, n = z.shape[0]
    cdef double odds = (1.0 - p0) / p0
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for k in range(n):
            ov[k] = _g(z[k], kind, p0, odds)
    return out


def sweep_max(double[:, ::1] prefix, double[::1] mean, double[::1] sd,
              double[::1] tau_scale, Py_ssize_t tau_lo, Py_ssize_t tau_hi,
              int kind, double p0):
    """Maximize the pooled window score over starts and lengths.

    ``prefix`` is the (T+1, N) per-sequence prefix-sum matrix; window
    ``(s, s+tau]`` scores ``sum_i g(u_i)`` with
    ``u_i = (prefix[s+tau,i] - prefix[s,i] - tau*mean[i]) / (sd[i]*tau_scale[tau])``.
    Returns ``(value, s, tau)``; ties prefer smaller ``s``, then smaller
    ``tau``, so the result does not depend on how callers partition the
    length range.
    """
    cdef Py_ssize_t T = prefix.shape[0] - 1
    cdef Py_ssize_t n = prefix.shape[1]
    cdef double odds = (1.0 - p0) / p0
    cdef double best = -INFINITY
    cdef Py_ssize_t best_s = -1
    cdef Py_ssize_t best_tau = -1
    cdef Py_ssize_t tau, s, i, cell
    cdef double ts, total, u, x, ub, frac, margin
    cdef bint cheap = kind == 0 or (kind == 1 and p0 == 1.0)
    cdef double[::1] tab

    if tau_lo < 1 or tau_hi > T - 1 or tau_lo > tau_hi:
        raise ValueError("invalid window-length range")

    if cheap:
        tab_arr = np.empty(0, dtype=np.float64)
        margin = 0.0
    else:
        tab_arr, eps = _bound_table(kind, p0)
        margin = n * eps
    tab = tab_arr

    tm_arr = np.empty(n, dtype=np.float64)
    den_arr = np.empty(n, dtype=np.float64)
    xs_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] tm = tm_arr
    cdef double[::1] den = den_arr
    cdef double[::1] xs = xs_arr

    with nogil:
        for tau in range(tau_lo, tau_hi + 1):
            ts = tau_scale[tau]
            for i in range(n):
                tm[i] = tau * mean[i]
                den[i] = sd[i] * ts
            for s in range(T - tau + 1):
                if cheap:
                    # transform is linear in x here: exact in one pass
                    total = 0.0
                    for i in range(n):
                        u = ((prefix[s + tau, i] - prefix[s, i]) - tm[i]) / den[i]
                        total += _g_from_x(0.5 * u * u, kind, p0, odds)
                else:
                    ub = margin
                    for i in range(n):
                        u = ((prefix[s + tau, i] - prefix[s, i]) - tm[i]) / den[i]
                        x = 0.5 * u * u
                        xs[i] = x
                        if x >= _TAB_XMAX:
                            ub += x  # g(x) <= x for mixture and weighted
                        else:
                            cell = <Py_ssize_t>(x * _TAB_INV_DX)
                            frac = x * _TAB_INV_DX - cell
                            ub += tab[cell] + frac * (tab[cell + 1] - tab[cell])
                    if ub < best:
                        continue
                    total = 0.0
                    for i in range(n):
                        total += _g_from_x(xs[i], kind, p0, odds)
                if total > best or (total == best and
                                    (s < best_s or (s == best_s and tau < best_tau))):
                    best = total
                    best_s = s
                    best_tau = tau
    return best, best_s, best_tau


def grid_max(double[:, ::1] u, int kind, double p0):
    """Maximize ``sum_i g(u[j, i])`` over grid rows ``j``.

    Returns ``(value, j)``; ties prefer smaller ``j``.  Uses the same
    certified bound-then-verify pruning as :func:`sweep_max`.
    """
    cdef Py_ssize_t J = u.shape[0]
    cdef Py_ssize_t n = u.shape[1]
    cdef double odds = (1.0 - p0) / p0
    cdef double best = -INFINITY
    cdef Py_ssize_t best_j = -1
    cdef Py_ssize_t j, i, cell
    cdef double total, x, ub, frac, margin
    cdef bint cheap = kind == 0 or (kind == 1 and p0 == 1.0)
    cdef double[::1] tab

    if cheap:
        tab_arr = np.empty(0, dtype=np.float64)
        margin = 0.0
    else:
        tab_arr, eps = _bound_table(kind, p0)
        margin = n * eps
    tab = tab_arr

    xs_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] xs = xs_arr

    with nogil:
        for j in range(J):
            if cheap:
                total = 0.0
                for i in range(n):
                    total += _g_from_x(0.5 * u[j, i] * u[j, i], kind, p0, odds)
            else:
                ub = margin
                for i in range(n):
                    x = 0.5 * u[j, i] * u[j, i]
                    xs[i] = x
                    if x >= _TAB_XMAX:
                        ub += x
                    else:
                        cell = <Py_ssize_t>(x * _TAB_INV_DX)
                        frac = x * _TAB_INV_DX - cell
                        ub += tab[cell] + frac * (tab[cell + 1] - tab[cell])
                if ub < best:
                    continue
                total = 0.0
                for i in range(n):
                    total += _g_from_x(xs[i], kind, p0, odds)
            if total > best:
                best = total
                best_j = j
    return best, best_j
