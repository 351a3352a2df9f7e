"""Exception hierarchy shared by all senselect modules."""


class SenselectError(Exception):
    """Base class for all errors raised by this package."""


class RankOutOfRangeError(SenselectError, ValueError):
    """Requested signal/noise ranks violate 1 <= r1 < r2 <= min(n, m)."""


class NumericalFailureError(SenselectError, ArithmeticError):
    """A numerical routine failed (SVD non-convergence, singular inner solve,
    or a cancellation guard tripped)."""


class DegenerateNoiseError(SenselectError, ValueError):
    """The noise model is identically zero; no weighting can be derived."""


class SensorIndexError(SenselectError, IndexError):
    """A sensor index falls outside the candidate range [0, n)."""


class DuplicateSensorError(SenselectError, ValueError):
    """The same candidate index appears more than once in a sensor set."""


class SingularFIMError(SenselectError, ValueError):
    """The Fisher information matrix (or the selected-sensor covariance) is
    singular beyond the conditioning guard."""


class UnderSampledError(SenselectError, ValueError):
    """Fewer sensors than latent variables; estimation is not defined here."""


class DimensionMismatchError(SenselectError, ValueError):
    """Array shapes are inconsistent with each other."""


class ZeroDataError(SenselectError, ValueError):
    """The reference data matrix has zero Frobenius norm."""


class InfeasibleBudgetError(SenselectError, ValueError):
    """The sensor budget p is smaller than the number of latent variables."""


class EnumerationTooLargeError(SenselectError, ValueError):
    """Exhaustive search would exceed the subset-count bound."""


class ParseError(SenselectError, ValueError):
    """A data file could not be parsed."""


class InconsistentGridError(SenselectError, ValueError):
    """Frames of a gridded dataset disagree in shape or mask."""


class EmptyMaskError(SenselectError, ValueError):
    """A gridded dataset has no valid (mask-true) cells."""


class BadFoldCountError(SenselectError, ValueError):
    """Cross-validation fold count is not compatible with the column count."""


class ConvergenceWarning(UserWarning):
    """The ADMM solver hit its iteration cap before meeting the tolerance."""
