"""Exception hierarchy shared by every module."""


class ParBucketError(Exception):
    """Base class for all package errors."""


class EmptyHeapError(ParBucketError, IndexError):
    """find_min or extract_min on a heap with no live elements."""


class PreconditionError(ParBucketError, ValueError):
    """Caller broke an operation precondition.

    ``index`` is the offending operation's position when replaying a trace.
    """

    def __init__(self, message, index=None):
        if index is not None:
            message = f"operation {index}: {message}"
        super().__init__(message)
        self.index = index


class InvariantError(ParBucketError, RuntimeError):
    """An internal invariant or resolve precondition failed.

    ``metrics`` carries a counter dump when the failure aborted an engine run.
    """

    def __init__(self, message, metrics=None):
        super().__init__(message)
        self.metrics = metrics


class DataError(ParBucketError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
