"""Exception hierarchy shared by all rotodeg modules."""


class RotodegError(Exception):
    """Base class for every error raised by rotodeg."""


class NormCapExceeded(RotodegError):
    pass


class BlowUp(RotodegError):
    """A trajectory left the ball of radius ``norm_cap`` before the final time."""

    def __init__(self, message, start_points=None):
        super().__init__(message)
        self.start_points = start_points


class StepLimit(RotodegError):
    pass


class OriginCrossing(RotodegError):
    """A trajectory came closer to the origin than the clearance threshold.

    ``hits`` is a list of :class:`rotodeg.flow.NullSetHit`.
    """

    def __init__(self, message, hits=()):
        super().__init__(message)
        self.hits = list(hits)


class RefinementLimit(RotodegError):
    """Adaptive refinement hit its depth limit.

    The partially refined object (if any) is attached as ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class BoundaryZero(RotodegError):
    """The map vanishes (to tolerance) on the boundary; the degree is undefined."""

    def __init__(self, message, point=None, clearance=None):
        super().__init__(message)
        self.point = point
        self.clearance = clearance


class IntegerGrazing(RotodegError):
    pass


class UnknownScenario(RotodegError):
    pass


class InvalidParams(RotodegError):
    pass


class MarginalResonance(RotodegError):
    pass


class ResonantSystem(RotodegError):
    pass


class Inconsistent(RotodegError):
    pass


class NotFound(RotodegError):
    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class NoConvergence(RotodegError):
    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class IllConditioned(RotodegError):
    pass


class GuaranteeViolation(RotodegError):
    """A periodic orbit promised by the degree bookkeeping was not found."""
