"""Detect intervals where the mean shifts in a subset of aligned sequences.

The scan pools per-sample standardized window sums through a score
transform and maximizes over all windows up to a length cap.  Analytic
tail approximations calibrate thresholds and p-values; Monte Carlo
helpers cross-check them and measure power.
"""

from .backend import BACKEND
from .errors import (
    ApproximationClampWarning,
    CnvScanError,
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
from .preprocess import (
    DiagnosticTables,
    PreprocessReport,
    diagnostics,
    leading_component,
    median_center,
    pipeline,
    probe_standardize,
    remove_rank1,
)
from .scan import (
    ConsistencyReport,
    Detection,
    Pedigree,
    ScanConfig,
    call_carriers,
    consistency_report,
    detect,
    scan_max,
)
from .significance import (
    TiltState,
    null_score_mean,
    nu,
    solve_tilt,
    tail_probability,
    threshold,
    tilt_state,
)
from .simulate import (
    OuConfig,
    PlantSpec,
    SignPolicy,
    marginal_power,
    ou_paths,
    plant_signal,
    power_curve,
    simulate_null_scores,
    simulate_null_threshold,
    simulate_ou_scores,
    simulate_ou_threshold,
)
from .statistic import (
    EstimationMode,
    IntensityMatrix,
    SequenceBaseline,
    StatisticKind,
    StatisticSpec,
    WindowScore,
    estimate_baseline,
    pooled_score,
    score_transform,
    score_transform_deriv,
    window_zscore,
    window_zscore_known,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BACKEND",
    # errors
    "ApproximationClampWarning",
    "CnvScanError",
    "ConfigError",
    "ConvergenceFailure",
    "DegenerateRow",
    "InvalidWindow",
    "MatrixFormatError",
    "TargetBelowMean",
    "TargetUnreachable",
    "TiltOutOfDomain",
    "UnknownSample",
    # statistic
    "EstimationMode",
    "IntensityMatrix",
    "SequenceBaseline",
    "StatisticKind",
    "StatisticSpec",
    "WindowScore",
    "estimate_baseline",
    "pooled_score",
    "score_transform",
    "score_transform_deriv",
    "window_zscore",
    "window_zscore_known",
    # significance
    "TiltState",
    "null_score_mean",
    "nu",
    "solve_tilt",
    "tail_probability",
    "threshold",
    "tilt_state",
    # scan
    "ConsistencyReport",
    "Detection",
    "Pedigree",
    "ScanConfig",
    "call_carriers",
    "consistency_report",
    "detect",
    "scan_max",
    # simulate
    "OuConfig",
    "PlantSpec",
    "SignPolicy",
    "marginal_power",
    "ou_paths",
    "plant_signal",
    "power_curve",
    "simulate_null_scores",
    "simulate_null_threshold",
    "simulate_ou_scores",
    "simulate_ou_threshold",
    # preprocess
    "DiagnosticTables",
    "PreprocessReport",
    "diagnostics",
    "leading_component",
    "median_center",
    "pipeline",
    "probe_standardize",
    "remove_rank1",
    # matrix I/O
    "read_detections_table",
    "read_matrix",
    "read_pedigree",
    "result_document",
    "write_matrix",
    "write_table",
]
