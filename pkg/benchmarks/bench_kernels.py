"""Compare the compiled scan kernels against the pure-NumPy fallback.

Times the three kernel entry points on a synthetic scan geometry and
prints one row per (function, backend).  Run from a checkout with the
package installed:

    python benchmarks/bench_kernels.py --n 100 --t 2000 --t1 50
"""

import argparse
import time

import numpy as np

from cnvscan import _kernels_py

try:
    from cnvscan import _kernels
except ImportError:
    _kernels = None


def _geometry(values, t1):
    n, T = values.shape
    prefix = np.zeros((T + 1, n))
    np.cumsum(values.T, axis=0, out=prefix[1:])
    taus = np.arange(t1 + 1, dtype=np.float64)
    tau_scale = np.ones(t1 + 1)
    tau_scale[1:] = np.sqrt(taus[1:] * (1.0 - taus[1:] / T))
    return prefix, tau_scale


def _best_of(fn, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=100, help="sequences (default: 100)")
    parser.add_argument("--t", type=int, default=2000, help="probes (default: 2000)")
    parser.add_argument("--t1", type=int, default=50, help="max window length (default: 50)")
    parser.add_argument("--p0", type=float, default=0.1, help="mixture weight (default: 0.1)")
    parser.add_argument("--repeats", type=int, default=5, help="best-of repeats (default: 5)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    values = rng.standard_normal((args.n, args.t))
    prefix, tau_scale = _geometry(values, args.t1)
    mean = values.mean(axis=1)
    sd = values.std(axis=1)
    z = rng.standard_normal(args.n * args.t)
    grid = np.ascontiguousarray(rng.standard_normal((args.t, args.n)))
    kind = 1  # mixture

    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.insert(0, ("cython", _kernels))
    else:
        print("compiled extension not built; timing the fallback only")

    cases = [
        ("transform", lambda mod: mod.transform(z, kind, args.p0)),
        ("sweep_max", lambda mod: mod.sweep_max(prefix, mean, sd, tau_scale,
                                                1, args.t1, kind, args.p0)),
        ("grid_max", lambda mod: mod.grid_max(grid, kind, args.p0)),
    ]

    print(f"N={args.n} T={args.t} t1={args.t1} p0={args.p0} (best of {args.repeats})")
    print(f"{'function':<10} {'backend':<8} {'time':>10}  {'vs python':>9}")
    for name, call in cases:
        timed = {label: _best_of(lambda: call(mod), args.repeats)
                 for label, mod in backends}
        reference = timed["python"][0]
        for label, _ in backends:
            elapsed, _ = timed[label]
            print(f"{name:<10} {label:<8} {elapsed * 1e3:8.2f}ms  {reference / elapsed:8.1f}x")
        if len(timed) == 2 and name != "transform":
            # window/row picks must agree between backends
            assert timed["cython"][1][1:] == timed["python"][1][1:], \
                f"{name} backends disagree"
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
