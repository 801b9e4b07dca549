"""Exception hierarchy shared by every module of the package."""


class HessminkError(ValueError):
    """Base class for all errors raised by hessmink."""


class ZeroPoint(HessminkError):
    pass


class OutOfCone(HessminkError):
    pass


class NonSmoothPoint(HessminkError):
    pass


class NotPositiveDefinite(HessminkError):
    pass


class DegeneratePlane(HessminkError):
    pass


class DomainError(HessminkError):
    pass


class InversionFailure(HessminkError):
    pass


class RootNotBracketed(HessminkError):
    pass


class DegenerateDenominator(HessminkError):
    pass


class IntegrationFailure(HessminkError):
    pass


class NonPositiveH(HessminkError):
    pass


class InsufficientSamples(HessminkError):
    pass


class FitFailure(HessminkError):
    pass


class NotOrbitPreserving(HessminkError):
    pass


class NotConvex(HessminkError):
    pass


class OverlappingSupports(HessminkError):
    pass


class ConvexityLost(HessminkError):
    pass


class QuadratureFailure(HessminkError):
    pass


class LengthMismatch(HessminkError):
    pass


class SpecError(HessminkError):
    """Malformed norm-spec JSON or expression."""
