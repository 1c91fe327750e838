"""Exception hierarchy.  Every failure names the offending point when one exists."""


class GeoflowError(Exception):
    """Base class for all library errors."""


class DifferentiationError(GeoflowError):
    pass


class OutOfChart(GeoflowError):
    pass


class ChartExhausted(GeoflowError):
    pass


class MetricDegenerate(GeoflowError):
    pass


class FrameNotOrthonormal(GeoflowError):
    pass


class FrameDegenerate(GeoflowError):
    pass


class TransportDiverged(GeoflowError):
    pass


class StepFailure(GeoflowError):
    pass


class LiftDiverged(GeoflowError):
    pass


class FoliationNotDeclared(GeoflowError):
    pass


class SubmersionNotDeclared(GeoflowError):
    pass


class NotPrincipalBundle(GeoflowError):
    pass
