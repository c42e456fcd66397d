"""Exception and warning types shared across the package."""


class CylbemError(Exception):
    """Base class for all package-specific errors."""


class DomainError(CylbemError, ValueError):
    """Input outside the mathematical domain of an operation."""


class AccuracyError(CylbemError, ArithmeticError):
    """A runtime accuracy sentinel (e.g. Wronskian residual) tripped."""


class DivergenceError(CylbemError, ValueError):
    """A requested infinite sum provably diverges for these inputs."""


class SingularGramError(CylbemError, ArithmeticError):
    """Gram (mass) eigenvalue too small to divide by."""


class QuadratureError(CylbemError, ArithmeticError):
    """Self-term quadrature failed its accuracy estimate."""


class PreconditionError(CylbemError, ValueError):
    """Operation precondition violated (e.g. hypersingular with pulse basis)."""


class NotCirculantError(CylbemError, ValueError):
    """Matrix handed to a circulant-only routine is not circulant."""


class InsufficientDataError(CylbemError, ValueError):
    """Too few unmasked points for a regression."""


class TruncationWarning(UserWarning):
    """A truncated series tail estimate exceeded its target tolerance."""


class NearSingularWarning(UserWarning):
    """Linear system condition estimate is large; solution may be inaccurate."""
