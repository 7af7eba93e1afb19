"""Exception hierarchy shared by every mcflab module."""


class MCFLabError(Exception):
    """Base class for all library errors."""


# geometry
class MeshError(MCFLabError):
    pass


class NonManifoldError(MeshError):
    pass


class OpenBoundaryError(MeshError):
    pass


class InconsistentOrientationError(MeshError):
    pass


class DegenerateElementError(MeshError):
    """Zero-length edge or (near) zero-area triangle.

    ``time`` is filled in by the flow integrator when the collapse happens
    during evolution.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time

    def __str__(self):
        base = super().__str__()
        if self.time is None:
            return base
        return f"{base} (t = {self.time:.17g})"


# flow
class PastExtinctionError(MCFLabError):
    pass


# spacetime / diagnostics
class LastSnapshotError(MCFLabError):
    pass


class PinchingViolatedError(MCFLabError):
    pass


class InsufficientTailError(MCFLabError):
    pass


# ineqlab
class NegativeFunctionError(MCFLabError):
    pass


class NotSubsolutionError(MCFLabError):
    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst


class LadderUnderresolvedError(MCFLabError):
    pass


class SubcriticalExponentError(MCFLabError):
    pass


class ZeroRightHandSideError(MCFLabError):
    pass


# rescale
class WindowOutOfRangeError(MCFLabError):
    pass


class NoBlowupError(MCFLabError):
    pass


class HypothesisNotMetError(MCFLabError):
    pass


# shapes / runner
class ResolutionTooLowError(MCFLabError):
    pass


class ConfigInvalidError(MCFLabError):
    pass


class EmptyRegionError(MCFLabError):
    """A cylinder captured no vertex-time samples."""
