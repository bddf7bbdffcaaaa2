"""Exception types shared across the package.

Everything raised on purpose derives from FedwadError so callers can catch
one base class at the CLI boundary.
"""


class FedwadError(Exception):
    """Base class for all package errors."""


class ConfigError(FedwadError):
    """A configuration object is internally inconsistent."""


# -- measure construction -------------------------------------------------

class ShapeMismatchError(FedwadError):
    """Array shapes, dimensions or lengths do not line up."""


class NonFiniteValueError(FedwadError):
    """NaN or Inf where finite values are required."""


class NegativeWeightError(FedwadError):
    """A weight vector contains a negative entry."""


class ZeroTotalMassError(FedwadError):
    """Weights sum to zero, so they cannot be normalized."""


class NonPsdCovarianceError(FedwadError):
    """Covariance is not symmetric positive semidefinite."""


class DimensionMismatchError(FedwadError):
    """Two measures live in different ambient dimensions."""


# -- transport solves ------------------------------------------------------

class UnsupportedExponentError(FedwadError):
    """Only p in {1, 2} is supported."""


class InfeasibleError(FedwadError):
    """Marginals carry different total mass; no coupling exists."""


class NumericalFailureError(FedwadError):
    """The solver hit its iteration cap or lost feasibility."""


class TooLargeForOracleError(FedwadError):
    """Instance has no small common denominator; enumeration refused."""


# -- geodesics --------------------------------------------------------------

class InvalidTError(FedwadError):
    """Interpolation parameter outside the allowed interval."""


class CovarianceMismatchError(FedwadError):
    """Gaussian operations here require equal covariances."""


class CollinearMeansError(FedwadError):
    """Degenerate Gaussian triple: the three means are collinear."""


# -- applications -----------------------------------------------------------

class KTooLargeError(FedwadError):
    """Requested more coreset points (or clusters) than available."""


# -- wire protocol ----------------------------------------------------------

class TruncatedError(FedwadError):
    """Frame or payload ended before its declared length."""


class BadMagicError(FedwadError):
    """Frame does not start with the protocol magic."""


class VersionMismatchError(FedwadError):
    """Peer speaks a different protocol version."""


class WeightInvariantViolatedError(FedwadError):
    """Decoded weights fail the probability-simplex check."""


class TransportError(FedwadError):
    """Socket-level failure while a run was in flight."""
