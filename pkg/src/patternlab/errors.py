"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so keep them distinct.
"""


class PatternLabError(Exception):
    pass


class StructuralError(PatternLabError, ValueError):
    """Inputs of incompatible shape (different groups, mismatched tables)."""


class DomainError(PatternLabError, ValueError):
    """The operation is undefined for this kind of input."""


class CoprimalityError(DomainError):
    pass


class PreconditionError(PatternLabError):
    """A hypothesis of the requested procedure fails on this input."""


class ResourceError(PatternLabError):
    """Enumeration or table size beyond the configured budget."""


class CascadeError(PatternLabError):
    def __init__(self, message, window=None):
        super().__init__(message)
        self.window = window


class SearchExhausted(PatternLabError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InternalCheckError(PatternLabError):
    """A guarantee that should follow from verified preconditions did not hold."""


class VerificationError(PatternLabError):
    pass


class InputFormatError(PatternLabError, ValueError):
    """Unparseable input file; the message names the file and line."""

    def __init__(self, path, line, message):
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")
        self.path, self.line = path, line
