# Licensed under the BSD 3-Clause License.

"""Typed errors raised by skelgnn.

Every error derives from SkelGnnError and from the closest builtin exception,
so callers may catch either.
"""


class SkelGnnError(Exception):
    """Base class for all skelgnn errors"""


# skeleton graphs
class IndexOutOfRange(SkelGnnError, IndexError):
    pass


class DuplicateEdge(SkelGnnError, ValueError):
    pass


class SelfLoop(SkelGnnError, ValueError):
    pass


class DisconnectedGraph(SkelGnnError, ValueError):
    pass


class ZeroRow(SkelGnnError, ValueError):
    pass


# autodiff
class ShapeMismatch(SkelGnnError, ValueError):
    pass


class AxisOutOfRange(SkelGnnError, IndexError):
    pass


class BatchTooSmall(SkelGnnError, ValueError):
    pass


class InvalidProbability(SkelGnnError, ValueError):
    pass


class KernelTooLarge(SkelGnnError, ValueError):
    pass


class NotScalar(SkelGnnError, ValueError):
    pass


class DetachedFromTape(SkelGnnError, RuntimeError):
    pass


# layers
class InvalidHopRange(SkelGnnError, ValueError):
    pass


class InvalidRatio(SkelGnnError, ValueError):
    pass


class MissingPairWeight(SkelGnnError, KeyError):
    pass


# models, training, io
class ConfigInvalid(SkelGnnError, ValueError):
    pass


class IoFailure(SkelGnnError, OSError):
    pass


class ShapeConflict(SkelGnnError, ValueError):
    pass


class VersionMismatch(SkelGnnError, ValueError):
    pass


class EmptyDataset(SkelGnnError, ValueError):
    pass


# metrics
class DegenerateConfiguration(SkelGnnError, ValueError):
    pass


# data
class InvalidImageSize(SkelGnnError, ValueError):
    pass


class InvalidSpec(SkelGnnError, ValueError):
    pass


class ParseError(SkelGnnError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class JointCountMismatch(SkelGnnError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
