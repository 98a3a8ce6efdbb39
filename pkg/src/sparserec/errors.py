"""Exception hierarchy shared by all modules."""


class SparseRecError(Exception):
    """Base class for errors raised by sparserec."""


class InvalidInputError(SparseRecError, ValueError):
    """Input data contains non-finite values or has the wrong shape."""


class InvalidArgumentError(SparseRecError, ValueError):
    """A scalar argument violates its precondition (k > n, m > n, ...)."""


class DegenerateFitError(SparseRecError, ArithmeticError):
    """A log-domain fit was asked to take the log of zero."""


class InfeasibleFactorizationError(SparseRecError, ArithmeticError):
    """The measurement operator does not have full row rank."""


class InstanceTooLargeError(SparseRecError, ValueError):
    """Exhaustive enumeration would exceed the configured support budget."""


class FileFormatError(SparseRecError, OSError):
    """An input file is malformed or too short."""


class WavFormatError(FileFormatError):
    """A WAV file is malformed, uses an unsupported encoding, or is too short."""
