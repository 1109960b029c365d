"""Exception types raised by the numerical routines."""


class PTWellError(Exception):
    """Base class; ``payload`` carries diagnostics for the CLI."""

    def __init__(self, message, **payload):
        super().__init__(message)
        self.payload = payload


class SectorError(PTWellError, ValueError):
    pass


class StabilizationFailure(PTWellError):
    pass


class EigenNonConvergence(PTWellError):
    pass


class NoConvergence(PTWellError):
    pass


class InitializationTooShallow(PTWellError):
    pass


class OverflowRegime(PTWellError):
    pass


class BoundaryZero(PTWellError):
    pass


class CountMismatch(PTWellError):
    pass


class AmbiguousClassification(PTWellError):
    pass


class ContourThroughZero(PTWellError):
    pass


class BranchTrackingFailure(PTWellError):
    pass


class ContinuationBreak(PTWellError):
    pass


class NotBracketed(PTWellError):
    pass


class NoImaginaryNode(PTWellError):
    pass


class FitDegenerate(PTWellError):
    pass


class Unclassified(PTWellError):
    pass


class NearTurningPoint(PTWellError):
    pass


class PoleOnEvaluation(PTWellError):
    pass


class TracerStall(PTWellError):
    pass


class ConnectionAmbiguous(PTWellError):
    pass


class NoTransition(PTWellError):
    pass
