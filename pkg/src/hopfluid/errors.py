"""Exception types raised across the package."""


class HopfluidError(Exception):
    """Base class for all package errors."""


class OutOfDomain(HopfluidError, ValueError):
    pass


class SingularPoint(HopfluidError, ValueError):
    """A point lies on a coordinate singularity of the chart (pole, axis)."""


class StepTooLarge(HopfluidError, ValueError):
    """A finite-difference stencil leaves the chart or touches a singular locus."""


class RankDeficient(HopfluidError, ArithmeticError):
    """The differential of a map has rank < 2 at a requested point."""


class QuadratureDivergence(HopfluidError, ArithmeticError):
    pass


class InadmissibleProfile(HopfluidError, ValueError):
    """Profile endpoints are not in {0, pi}."""


class ZeroCharge(HopfluidError, ArithmeticError):
    pass


class NoAdmissibleScale(HopfluidError, ArithmeticError):
    pass


class NonMonotoneProfile(HopfluidError, ArithmeticError):
    pass


class ConfigError(HopfluidError, ValueError):
    """Invalid case configuration; message carries file/line/field context."""
