"""Exception types raised by the library."""


class CnvScanError(Exception):
    """Base class for all library errors."""


class DegenerateRow(CnvScanError):
    """A sequence has zero estimated spread; it cannot be standardized."""


class InvalidWindow(CnvScanError):
    """Window endpoints violate 0 <= s < t <= T with t - s < T."""


class TiltOutOfDomain(CnvScanError):
    """Tilt parameter outside [0, theta_max); the moment integral diverges."""


class TargetBelowMean(CnvScanError):
    """Requested tilted mean does not exceed the null mean of the score."""


class TargetUnreachable(CnvScanError):
    """Requested tilted mean exceeds what the tilt domain can resolve."""


class ConvergenceFailure(CnvScanError):
    """An iterative numerical routine failed to reach its tolerance."""


class UnknownSample(CnvScanError):
    """A pedigree or lookup referenced a sample id that does not exist."""


class MatrixFormatError(CnvScanError):
    """An input matrix file is malformed (ragged, non-numeric, empty)."""


class ConfigError(CnvScanError):
    """Invalid configuration (flag values, window bounds, levels)."""


class ApproximationClampWarning(RuntimeWarning):
    """The analytic tail formula exceeded 1 and was clamped."""
