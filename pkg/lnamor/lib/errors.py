"""Exception hierarchy shared by all lnamor modules.

Every error carries the CLI exit code of its family so the command line can
map failures without knowing individual classes.
"""

from lnamor.lib import constants as c


class LnamorError(Exception):
    """Base class for every error raised by lnamor."""

    exit_code = c.EXIT_MODEL


class ConfigError(LnamorError):
    """Raised when a run configuration is inconsistent with the model."""

    exit_code = c.EXIT_CONFIG


# Model ingestion and evaluation


class ModelError(LnamorError):
    """Raised when a model cannot be read, evaluated or solved."""


class ParseError(ModelError):
    """Raised when a model document or rate expression is malformed."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class UnboundParameter(ModelError):
    """Raised when a rate expression references an unknown identifier."""


class BadStoichiometry(ModelError):
    """Raised when a stoichiometry column is malformed."""


class EvalError(ModelError):
    """Raised when an expression cannot be evaluated (division by zero, sqrt < 0)."""


class NoConvergence(ModelError):
    """Raised when an iterative method exhausts its iteration budget."""


class SingularJacobian(ModelError):
    """Raised when Newton's method meets a singular Jacobian."""


# Numerical faults


class NumericalError(LnamorError):
    """Raised when a numerical precondition or postcondition fails."""


class NotStable(NumericalError):
    """Raised when a matrix that must be Hurwitz is not."""


class DimensionMismatch(NumericalError):
    """Raised when matrix shapes do not conform."""


class NonFiniteEntries(NumericalError):
    """Raised when a matrix holds NaN or Inf."""


class NotPositiveDefinite(NumericalError):
    """Raised when a matrix that must be positive definite is not."""


class NotHPlus(NumericalError):
    """Raised when a diagonal certificate is requested for a non-H+ drift."""


class SingularCompanion(NumericalError):
    """Raised when the companion matrix M(A) is singular."""


class CertificateUnavailable(NumericalError):
    """Raised when no diagonal Lyapunov certificate can be built."""


class PatternMismatch(NumericalError):
    """Raised when Gramians do not conform to the requested sparsity pattern."""


class SingularFastBlock(NumericalError):
    """Raised when the discarded block of a balanced drift is singular."""


class DiagonalStabilityLost(NumericalError):
    """Raised when a reduced drift fails its diagonal certificate check."""


class FastRootNotFound(NumericalError):
    """Raised when the fast subsystem has no root near the warm start."""


class SingularFastJacobian(NumericalError):
    """Raised when the fast Jacobian A22 is singular."""


class NonzeroFeedthrough(NumericalError):
    """Raised when an H2 norm is requested for a system with D != 0."""


class IntegrationError(NumericalError):
    """Raised when an ODE integration fails or loses positive semidefiniteness."""


# Reduction outcomes with dedicated exit codes


class Infeasible(LnamorError):
    """Raised when no strictly feasible structured Gramian exists."""

    exit_code = c.EXIT_INFEASIBLE


class HankelTie(LnamorError):
    """Raised when the kept and discarded Hankel values are not separated."""

    exit_code = c.EXIT_HANKEL_TIE
