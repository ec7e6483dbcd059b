"""Exception hierarchy shared by all modules."""


class FloquetError(Exception):
    """Base class for every error raised by this package."""


class NotUnitary(FloquetError):
    pass


class NotSpecialUnitary(FloquetError):
    pass


class EigensolverFailure(FloquetError):
    pass


class BranchCutHit(FloquetError):
    pass


class InvalidSize(FloquetError):
    pass


class RadiusTooLarge(FloquetError):
    pass


class SelfIntersection(FloquetError):
    pass


class StepAcrossDiscontinuity(FloquetError):
    pass


class NonzeroSigmaWinding(FloquetError):
    pass


class EndpointMismatch(FloquetError):
    pass


class GapClosed(FloquetError):
    pass


class GridTooCoarse(FloquetError):
    pass


class PhaseJumpTooLarge(FloquetError):
    pass


class ThresholdTooCoarse(FloquetError):
    pass


class BoundaryDegenerate(FloquetError):
    pass


class Overlap(FloquetError):
    pass


class UnknownGeometry(FloquetError):
    pass


class LinkCollapse(FloquetError):
    pass


class IsolationFailure(FloquetError):
    pass


class NotFloquetMap(FloquetError):
    pass


class GridMismatch(FloquetError):
    pass


class ConfigError(FloquetError):
    pass
