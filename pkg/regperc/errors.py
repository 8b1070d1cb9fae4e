"""Error types for regperc with optional flag and source location context."""

from __future__ import annotations


class RegPercError(Exception):
    """Base error with optional offending flag and config-file location."""

    def __init__(
        self,
        message: str,
        flag: str | None = None,
        line: int | None = None,
        column: int | None = None,
    ):
        self.message = message
        self.flag = flag
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f" (line {line}"
            if column is not None:
                loc += f", col {column}"
            loc += ")"
        prefix = f"{flag}: " if flag and not message.startswith(flag) else ""
        super().__init__(f"{prefix}{message}{loc}")


class ValidationError(RegPercError):
    """Raised when inputs violate an operation's preconditions."""


class NumericalError(RegPercError):
    """Raised when a numerical procedure fails to deliver its contract."""


# ---------------------------------------------------------------------------
# Validation family
# ---------------------------------------------------------------------------

class OddProduct(ValidationError):
    """n*d is odd, so no d-regular graph on n vertices exists."""


class DegreeTooLarge(ValidationError):
    """d >= n."""


class DegreeTooSmall(ValidationError):
    """d below the supported minimum."""


class KTooLarge(ValidationError):
    """Cycle length outside the enumerable range."""


class TooLarge(ValidationError):
    """Problem size over the configured cap."""


class LengthMismatch(ValidationError):
    """Function length differs from the vertex count."""


class TooFewPoints(ValidationError):
    """Curve too short for the requested smoothing window."""


class DomainError(ValidationError):
    """Argument outside the domain of a special function."""


class OutsideSpectrum(ValidationError):
    """Spectral parameter outside [-2*sqrt(d-1), 2*sqrt(d-1)]."""


class EmptySpectrum(ValidationError):
    """No eigenpairs to choose from."""


class UnknownCommand(ValidationError):
    """CLI invoked with an unknown subcommand or malformed arguments."""


class MissingColumn(ValidationError):
    """Plot spec references a column the CSV does not have."""


class EmptyData(ValidationError):
    """Plot input has no data rows."""


class ConfigError(ValidationError):
    """Config file cannot be parsed or holds an unknown/ill-typed key."""


# ---------------------------------------------------------------------------
# Numerical family
# ---------------------------------------------------------------------------

class RejectionLimit(NumericalError):
    """No simple graph within the restart budget."""


class NotSymmetric(NumericalError):
    """Adjacency matrix is not symmetric."""


class ResidualTooLarge(NumericalError):
    """Eigenpair residual above the accepted bound."""


class NoTransition(NumericalError):
    """Ratio curve has no percolation transition to locate."""


class NotPSD(NumericalError):
    """Covariance matrix is not positive semidefinite within tolerance."""


class DegenerateKernel(NumericalError):
    """Path regression has vanishing conditional variance."""


class NoConvergence(NumericalError):
    """Iterative method hit its iteration cap."""


class TruncationTooTight(NumericalError):
    """Quadrature interval could not be extended far enough."""


class BracketFailure(NumericalError):
    """Growth rate does not straddle 1/(d-1) on the analytic bracket."""


class NonMonotoneGrowth(NumericalError):
    """Growth rate increased with alpha between bisection steps."""
