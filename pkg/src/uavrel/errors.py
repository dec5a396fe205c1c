"""Exception and warning types shared by every module."""


class ReliabilityError(ValueError):
    """Raised when an input or a model violates a contract.

    ``code`` is a stable machine-readable tag such as ``"DUPLICATE_STATE"``;
    callers should branch on it rather than on the message text.
    """

    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.detail = message


class ParseError(ReliabilityError):
    """Fault-tree document error with a 1-based line/column position."""

    def __init__(self, code, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(code, f"{message}{where}")
        self.line = line
        self.column = column


class GridTooCoarseWarning(UserWarning):
    """Renewal grid step exceeds a tenth of the fastest sojourn time scale."""


class HorizonCapWarning(UserWarning):
    """Reliability integration stopped at the hard cap; the MTTF is a lower bound."""


class AbsorbingStartWarning(UserWarning):
    """MTTF requested from a failure state; 0 is returned by convention."""
