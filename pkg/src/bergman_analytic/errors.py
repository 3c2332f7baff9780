"""Exception hierarchy shared across the package."""


class BergmanError(Exception):
    """Base class for every error raised by this package."""


class LayoutMismatch(BergmanError, ValueError):
    pass


class ModeMismatch(BergmanError, TypeError):
    pass


class ZeroConstantTerm(BergmanError, ZeroDivisionError):
    pass


class BadConstantTerm(BergmanError, ValueError):
    pass


class NotSquare(BergmanError, ValueError):
    pass


class DegenerateMetric(BergmanError, ValueError):
    pass


class PreconditionViolated(BergmanError, ValueError):
    pass


class InsufficientInputOrder(BergmanError, ValueError):
    pass


class NotPositiveDefinite(BergmanError, ValueError):
    pass


class DomainError(BergmanError, ValueError):
    pass


class NonIntegrableWeight(BergmanError, ValueError):
    pass


class TailNotConverged(BergmanError, RuntimeError):
    pass


class QuadratureNotConverged(BergmanError, RuntimeError):
    pass


class TruncationUnreliable(BergmanError, ValueError):
    pass


class SpecError(BergmanError, ValueError):
    """Invalid potential specification file."""
