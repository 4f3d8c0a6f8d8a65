"""Exception hierarchy.

Every failure raised by the library derives from :class:`NcHeatError`, so a
batch driver can separate invariant violations from infrastructure faults.
"""


class NcHeatError(Exception):
    """Base class for all library errors."""


class LeakageExceeded(NcHeatError):
    """Truncated channel pushed more mass out of the working block than allowed."""

    def __init__(self, message, leakage=None):
        super().__init__(message)
        self.leakage = leakage


class CalibrationUnstable(NcHeatError):
    pass


class InvalidExponent(NcHeatError, ValueError):
    pass


class ExponentMismatch(NcHeatError, ValueError):
    pass


class QuadratureUnderresolved(NcHeatError):
    pass


class GridTooShort(NcHeatError):
    pass


class DimensionMismatch(NcHeatError, ValueError):
    pass


class NotPositive(NcHeatError, ValueError):
    pass


class NotConverged(NcHeatError):
    pass


class BoundViolated(NcHeatError):
    """Carries the serialized counterexample in ``record``."""

    def __init__(self, message, record=""):
        super().__init__(message)
        self.record = record


class JensenViolated(NcHeatError):
    def __init__(self, message, record=""):
        super().__init__(message)
        self.record = record


class IllConditioned(NcHeatError):
    pass


class NotContracting(NcHeatError):
    def __init__(self, message, ratio=None):
        super().__init__(message)
        self.ratio = ratio


class NoAdmissibleQ(NcHeatError, ValueError):
    pass


class BoxTooSmall(NcHeatError):
    def __init__(self, message, boundary_fraction=None):
        super().__init__(message)
        self.boundary_fraction = boundary_fraction


class Overflow(NcHeatError):
    """Solution norm crossed the blow-up ceiling; a signal, not a fault."""

    def __init__(self, message, t=None, value=None):
        super().__init__(message)
        self.t = t
        self.value = value
