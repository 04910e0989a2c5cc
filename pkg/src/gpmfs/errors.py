"""Exception hierarchy shared by all gpmfs modules."""


class GPMFSError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(GPMFSError, ValueError):
    """An argument is outside its admissible range."""


class ValidationError(GPMFSError, ValueError):
    """Input data parsed but violates a domain rule (non-binary label, missing value...)."""


class ParseError(GPMFSError, ValueError):
    """Text input is malformed.

    ``line`` is the 1-based line number where the problem was detected, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(GPMFSError, ArithmeticError):
    """A linear system could not be factorized, even after jitter was added."""

    def __init__(self, message, iteration=None):
        self.iteration = iteration
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)


class InvariantError(GPMFSError, AssertionError):
    """An internal invariant was violated; indicates a bug or corrupted input."""
