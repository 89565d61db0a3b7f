"""Exception hierarchy shared by every smatch module."""


class SmatchError(Exception):
    """Base class for all errors raised by smatch."""


class InvalidInputError(SmatchError, ValueError):
    """Input violates a documented precondition (shape, finiteness, range)."""


class DimensionMismatchError(InvalidInputError):
    pass


class DegenerateNeuronError(InvalidInputError):
    """A zero activation vector was met under the ``reject`` policy."""

    def __init__(self, message, side=None, index=None):
        super().__init__(message)
        self.side = side
        self.index = index


class TooLargeError(SmatchError):
    """An exponential checker was asked to run above its size limit."""


class GenerationError(SmatchError):
    pass


class FormatError(SmatchError):
    """A binary activation file is malformed."""


class ParseError(SmatchError):
    """A CSV activation file is malformed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
