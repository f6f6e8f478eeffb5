"""Exception hierarchy.

Every error raised by the package derives from :class:`HeteroflowError`.
The two intermediate classes decide the CLI exit code: validation problems
exit with 2, numerical failures with 3.
"""


class HeteroflowError(Exception):
    exit_code = 1


class ValidationError(HeteroflowError, ValueError):
    exit_code = 2


class NumericalError(HeteroflowError, ArithmeticError):
    exit_code = 3


# graph construction
class SelfLoop(ValidationError):
    pass


class DuplicateEdge(ValidationError):
    pass


class Disconnected(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class GraphTooLarge(ValidationError):
    pass


# shapes and operands
class DimensionMismatch(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class EdgeNotInGraph(ValidationError):
    pass


class TargetOutOfRange(ValidationError):
    pass


class EmptySplit(ValidationError):
    pass


class InvalidConfig(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# metrics
class NonpositiveBandwidth(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class EmptySample(ValidationError):
    pass


# numerical failures
class NoConvergence(NumericalError):
    pass


class ZeroFeatureNorm(NumericalError):
    pass


class ZeroNorm(NumericalError):
    pass


class ZeroInitialSubsetEnergy(NumericalError):
    pass


class Diverged(NumericalError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NonFiniteLoss(NumericalError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
