"""Exception hierarchy shared by every module of the package."""


class SddFlowError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class InputError(SddFlowError, ValueError):
    pass


class SelfLoop(InputError):
    pass


class NonpositiveResistance(InputError):
    pass


class VertexOutOfRange(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class InfeasibleFlow(SddFlowError):
    pass


class GraphDisconnected(InputError):
    pass


class InvalidTreeEdges(InputError):
    pass


class TooSmall(InputError):
    pass


class DemandNotBalanced(InputError):
    pass


class NotOffTree(InputError):
    pass


class NoOffTreeEdges(SddFlowError):
    pass


class BadScale(InputError):
    pass


class NotSymmetric(InputError):
    pass


class NotDiagonallyDominant(InputError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DecompositionInvariantViolated(SddFlowError):
    pass


class InconsistentSystem(InputError):
    pass


class TooLarge(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class LengthMismatch(InputError):
    pass


class InconsistentLaplacian(InputError):
    pass
