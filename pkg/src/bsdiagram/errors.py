"""Exception hierarchy shared by all modules."""


class DiagramError(Exception):
    """Base class for every error raised by this package."""


class InvalidPolygon(DiagramError):
    pass


class NotConvexSupport(DiagramError):
    pass


class DegenerateShadow(DiagramError):
    pass


class SingularMesh(DiagramError):
    pass


class SolverFailure(DiagramError):
    pass


class NonConvergence(SolverFailure):
    pass


class OutOfRange(DiagramError, ValueError):
    pass


class EmptyInput(DiagramError, ValueError):
    pass


class PointOnPath(DiagramError, ValueError):
    pass


class WindingResidualError(DiagramError):
    """Accumulated turning angle is too far from a multiple of 2*pi."""


class PinFailed(DiagramError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class BudgetExhausted(DiagramError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
