"""
Exceptions Module

Error hierarchy shared by every stage of the harness. Each error carries the
process exit code the command-line front end reports for it; library code
only raises, ``harness.cli`` is the single place that turns errors into exit
statuses.
"""


class HarnessError(Exception):
    """Base class for all harness errors."""
    exit_code = 1


class ConfigurationError(HarnessError):
    """Unparseable config file, unknown key or invalid setting value."""
    exit_code = 3


class DataError(HarnessError):
    """Missing, malformed or inconsistent input data."""
    exit_code = 4


class FieldFormatError(DataError):
    """Bad magic, unsupported version or truncated payload in a binary file."""


class AlignmentError(DataError):
    """Two inputs do not share the same grid or calendar."""


class EstimationGapError(DataError):
    """
    A (cell, day-of-year) pair needed downstream has no mean estimate.

    Attributes:
        gaps: list of (cell_id, day_of_year) pairs, day_of_year in 1..366
    """

    def __init__(self, message, gaps):
        super().__init__(message)
        self.gaps = gaps


class FactorizationError(DataError):
    """
    Covariance matrix is not positive definite even after jitter escalation.

    Attributes:
        leading_minor: order of the first leading minor that failed
    """

    def __init__(self, message, leading_minor):
        super().__init__(message)
        self.leading_minor = leading_minor


class CapExceededError(DataError):
    """Grid is larger than the dense simulation backend accepts."""


class MissingTruthError(DataError):
    """The truth table does not cover every validation point."""


class SubmissionIOError(DataError):
    """A submission file could not be read at all (as opposed to being invalid)."""


class SubmissionValidationError(HarnessError):
    """A submission failed validation where a valid one was required."""
    exit_code = 5


class InvalidForecastError(SubmissionValidationError):
    """A predictive CDF is not a nondecreasing vector of probabilities on the design grid."""
