"""Command-line surface for scanning, thresholds, power, and simulation.

Exit codes: 0 success, 2 I/O or parse failure, 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .backend import BACKEND
from .errors import (
    ConfigError,
    ConvergenceFailure,
    DegenerateRow,
    InvalidWindow,
    MatrixFormatError,
    TargetBelowMean,
    TargetUnreachable,
    TiltOutOfDomain,
    UnknownSample,
)
from .matrixio import (
    read_detections_table,
    read_matrix,
    read_pedigree,
    result_document,
    write_matrix,
    write_table,
)
from .preprocess import diagnostics, pipeline
from .scan import ScanConfig, consistency_report, detect
from .significance import tail_probability, threshold
from .simulate import (
    OuConfig,
    marginal_power,
    power_curve,
    simulate_null_threshold,
    simulate_ou_threshold,
)
from .statistic import EstimationMode, StatisticKind, StatisticSpec

_STATISTICS = {
    "sumchisq": StatisticKind.SUM_CHISQ,
    "mixture": StatisticKind.MIXTURE,
    "weighted": StatisticKind.WEIGHTED,
}
_ESTIMATION = {"mle": EstimationMode.MLE, "robust": EstimationMode.ROBUST}


def _spec_from(args) -> StatisticSpec:
    return StatisticSpec(_STATISTICS[args.statistic], args.p0)


def _effective_alpha(args) -> float:
    alpha = args.alpha
    if getattr(args, "bonferroni", None):
        if args.bonferroni < 1:
            raise ConfigError(f"--bonferroni must be >= 1, got {args.bonferroni}")
        alpha = alpha / args.bonferroni
    return alpha


def _add_statistic_flags(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--statistic",
        choices=sorted(_STATISTICS),
        default="mixture",
        help="pooled score transform (default: mixture)",
    )
    parser.add_argument(
        "--p0",
        type=float,
        default=1.0,
        help="assumed carrier fraction for mixture/weighted (default: 1.0)",
    )


def _add_geometry_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--n-samples", type=int, required=True, help="number of sequences N")
    parser.add_argument("--n-probes", type=int, required=True, help="number of probes T")
    parser.add_argument("--t0", type=int, default=1, help="minimum window length (default: 1)")
    parser.add_argument("--t1", type=int, required=True, help="maximum window length")


def _add_bonferroni_flag(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--bonferroni",
        type=int,
        nargs="?",
        const=23,
        default=None,
        metavar="K",
        help="divide alpha by K independent scans (default K: 23)",
    )


def cmd_preprocess(args) -> int:
    data = read_matrix(args.input)
    cleaned, report = pipeline(data, scale_floor=args.scale_floor)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_matrix(fh, cleaned)
    else:
        write_matrix(sys.stdout, cleaned)
    print(
        f"leading_singular_value\t{report.leading_singular_value:.17g}\n"
        f"singular_value_ratio\t{report.singular_value_ratio:.17g}\n"
        f"flagged_probes\t{int(report.flagged_probes.sum())}",
        file=sys.stderr,
    )
    if args.qq_out or args.acf_out:
        tables = diagnostics(cleaned, args.diagnostics_sample)
        if args.qq_out:
            with open(args.qq_out, "w", encoding="utf-8") as fh:
                write_table(fh, ["theoretical", "observed"], tables.qq_points.tolist())
        if args.acf_out:
            with open(args.acf_out, "w", encoding="utf-8") as fh:
                write_table(
                    fh,
                    ["lag", "acf"],
                    [(k + 1, float(v)) for k, v in enumerate(tables.acf_values)],
                )
    return 0


def cmd_scan(args) -> int:
    data = read_matrix(args.input)
    if not args.no_preprocess:
        data, _ = pipeline(data)
    config = ScanConfig(
        t0=args.t0,
        t1=args.t1,
        spec=_spec_from(args),
        alpha=_effective_alpha(args),
        max_intervals=args.max_intervals,
        carrier_delta_min=args.delta_min,
        estimation_mode=_ESTIMATION[args.estimation],
        threads=args.threads,
    )
    detections = detect(data, config)
    echo = {
        "command": "scan",
        "input": args.input,
        "statistic": args.statistic,
        "p0": args.p0,
        "t0": args.t0,
        "t1": args.t1,
        "alpha": args.alpha,
        "bonferroni": args.bonferroni,
        "delta_min": args.delta_min,
        "max_intervals": args.max_intervals,
        "estimation": args.estimation,
        "no_preprocess": args.no_preprocess,
        "seed": args.seed,
    }
    doc = result_document(__version__, echo, detections, data.sample_ids)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(doc)
    else:
        sys.stdout.write(doc)
    return 0


def cmd_threshold(args) -> int:
    b = threshold(
        _spec_from(args),
        args.n_samples,
        args.n_probes,
        args.t0,
        args.t1,
        _effective_alpha(args),
        form=args.form,
    )
    print(f"{b:.10g}")
    return 0


def cmd_pvalue(args) -> int:
    p = tail_probability(
        _spec_from(args),
        args.n_samples,
        args.n_probes,
        args.t0,
        args.t1,
        args.level,
        form=args.form,
    )
    print(f"{p:.10g}")
    return 0


def cmd_power(args) -> int:
    lengths = [int(tok) for tok in args.lengths.split(",") if tok]
    if not lengths:
        raise ConfigError("--lengths must list at least one interval length")
    spec = _spec_from(args)
    if args.threshold is not None:
        b = args.threshold
    else:
        if args.n_probes is None or args.t1 is None:
            raise ConfigError("provide --threshold, or --n-probes and --t1 to derive one")
        b = threshold(
            spec, args.n_samples, args.n_probes, args.t0, args.t1, _effective_alpha(args)
        )
    powers = power_curve(
        spec, args.n_samples, lengths, args.snr, args.p, b, args.reps, args.seed
    )
    write_table(
        sys.stdout,
        ["length", "power"],
        [(L, float(q)) for L, q in zip(lengths, powers)],
    )
    return 0


def cmd_simulate_null(args) -> int:
    b = simulate_null_threshold(
        _spec_from(args),
        args.n_samples,
        args.n_probes,
        args.t0,
        args.t1,
        args.alpha,
        args.reps,
        args.seed,
        estimated=args.estimated,
    )
    print(f"{b:.10g}")
    return 0


def cmd_simulate_linkage(args) -> int:
    config = OuConfig(
        n_sequences=args.n_samples,
        genome_length=args.genome_length,
        spacing=args.spacing,
        beta=args.beta,
        p0=args.p0,
    )
    b = simulate_ou_threshold(config, args.alpha, args.reps, args.seed)
    print(f"{b:.10g}")
    return 0


def cmd_consistency(args) -> int:
    detections = read_detections_table(args.detections)
    pedigree = read_pedigree(args.pedigree)
    report = consistency_report(detections, pedigree, overlap_fraction=args.overlap)
    write_table(sys.stdout, ["total", "inconsistent"], [(report.total, report.inconsistent)])
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cnvscan",
        description="Detect intervals where the mean shifts in a subset of aligned sequences.",
    )
    parser.add_argument("--version", action="version", version=f"cnvscan {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="normalize a raw intensity matrix")
    p.add_argument("input")
    p.add_argument("--out", help="output matrix path (default: stdout)")
    p.add_argument("--scale-floor", type=float, default=1e-6)
    p.add_argument("--diagnostics-sample", type=int, default=0)
    p.add_argument("--qq-out", help="write QQ table for the diagnostics sample")
    p.add_argument("--acf-out", help="write autocorrelation table for the diagnostics sample")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("scan", help="detect variant intervals in a matrix")
    p.add_argument("input")
    _add_statistic_flags(p)
    p.add_argument("--t0", type=int, default=1)
    p.add_argument("--t1", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    _add_bonferroni_flag(p)
    p.add_argument("--delta-min", type=float, default=0.3, help="carrier median-gap threshold")
    p.add_argument("--max-intervals", type=int, default=5)
    p.add_argument("--estimation", choices=sorted(_ESTIMATION), default="mle")
    p.add_argument("--no-preprocess", action="store_true", help="scan the matrix as given")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="echoed into the result document")
    p.add_argument("--out", help="result document path (default: stdout)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("threshold", help="analytic scan threshold for a significance level")
    _add_statistic_flags(p)
    _add_geometry_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    _add_bonferroni_flag(p)
    p.add_argument("--form", choices=["sum", "integral"], default="sum")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("pvalue", help="analytic tail probability of a scan level")
    _add_statistic_flags(p)
    _add_geometry_flags(p)
    p.add_argument("--level", type=float, required=True)
    p.add_argument("--form", choices=["sum", "integral"], default="sum")
    p.set_defaults(func=cmd_pvalue)

    p = sub.add_parser("power", help="marginal detection power across interval lengths")
    _add_statistic_flags(p)
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--lengths", required=True, help="comma-separated interval lengths")
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--p", type=float, required=True, help="true carrier fraction")
    p.add_argument("--threshold", type=float, help="scan threshold to beat")
    p.add_argument("--n-probes", type=int, help="scan length for deriving a threshold")
    p.add_argument("--t0", type=int, default=1)
    p.add_argument("--t1", type=int, help="maximum window for deriving a threshold")
    p.add_argument("--alpha", type=float, default=0.05)
    _add_bonferroni_flag(p)
    p.add_argument("--reps", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("simulate-null", help="Monte Carlo null threshold for the matrix scan")
    _add_statistic_flags(p)
    _add_geometry_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--estimated", action="store_true", help="estimate baselines per repetition")
    p.set_defaults(func=cmd_simulate_null)

    p = sub.add_parser("simulate-linkage", help="Monte Carlo threshold for the autocorrelated grid scan")
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--genome-length", type=float, required=True)
    p.add_argument("--spacing", type=float, default=1.0)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--p0", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate_linkage)

    p = sub.add_parser("consistency", help="replicate/trio consistency counts for detections")
    p.add_argument("detections", help="table of per-sample detections")
    p.add_argument("--pedigree", required=True, help="pair/trio definitions")
    p.add_argument("--overlap", type=float, default=0.0, help="reciprocal overlap fraction (0: any overlap)")
    p.set_defaults(func=cmd_consistency)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MatrixFormatError, DegenerateRow) as exc:
        print(f"cnvscan: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cnvscan: {exc}", file=sys.stderr)
        return 2
    except (
        ConfigError,
        InvalidWindow,
        TiltOutOfDomain,
        TargetBelowMean,
        TargetUnreachable,
        UnknownSample,
        ConvergenceFailure,
        ValueError,
    ) as exc:
        print(f"cnvscan: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
