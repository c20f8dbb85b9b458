"""Exception hierarchy shared by every module of the package."""


class FrameCompError(Exception):
    """Base class for all errors raised by framecomp."""


class LengthMismatch(FrameCompError, ValueError):
    pass


class DimMismatch(FrameCompError, ValueError):
    pass


class DomainError(FrameCompError, ValueError):
    """An argument lies outside the domain of a function."""


class IndexOutOfRange(FrameCompError, IndexError):
    pass


class PreconditionError(FrameCompError, ValueError):
    pass


class InfeasibleDesign(FrameCompError, ValueError):
    """No sequence with the requested norms and frame operator exists.

    ``violated_prefix`` is the first (1-based) prefix length at which the
    partial-sum inequality fails, or ``None`` when only the traces differ.
    """

    def __init__(self, message, violated_prefix=None):
        super().__init__(message)
        self.violated_prefix = violated_prefix


class NotBlockStructured(FrameCompError, ValueError):
    pass


class NoConvergence(FrameCompError, RuntimeError):
    pass


class InternalPairingError(FrameCompError, RuntimeError):
    """The optimal spectrum produced a negative completion spectrum.

    This signals a bug in the spectrum assembly, never bad user input.
    """
