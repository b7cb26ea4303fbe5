"""Exception types raised by the pricing engine."""


class FSTError(Exception):
    """Base class for every error raised by fstpricer."""


class InvalidParameters(FSTError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InfeasibleCorrection(InvalidParameters):
    """The martingale drift correction is infinite or undefined."""


class PoleEvaluation(FSTError, ZeroDivisionError):
    pass


class DomainError(FSTError, ValueError):
    pass


class BadGridSize(FSTError, ValueError):
    pass


class BadDomain(FSTError, ValueError):
    pass


class InvalidConstraint(FSTError, ValueError):
    pass


class OutOfDomain(FSTError, ValueError):
    pass


class NumericalBlowup(FSTError, ArithmeticError):
    """Evolved values grew without bound or lost Hermitian symmetry."""


class NegativeRate(FSTError, ValueError):
    pass


class UnsupportedCase(FSTError, ValueError):
    pass


class UnsupportedModel(FSTError, TypeError):
    pass


class NoOracle(FSTError, LookupError):
    pass


class ConfigError(FSTError, ValueError):
    pass


class TrustedRegionWarning(UserWarning):
    """A price was read outside the inner 80% of the grid."""
