"""Exception hierarchy shared by every module."""


class BridgeRankError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(BridgeRankError, ValueError):
    """An input violates an operation's preconditions (shape, range, membership)."""


class TrainingError(BridgeRankError, RuntimeError):
    """Optimization failed, e.g. the loss became non-finite."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class DataFormatError(BridgeRankError, ValueError):
    """A file could not be parsed. Carries the path and 1-based line number when known."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class RatingRangeError(DataFormatError):
    """A rating lies outside [-1, 1] or is not finite."""


class DuplicateVoteError(ContractError):
    """The same (user_id, note_id) pair was seen twice."""


class SchemaError(DataFormatError):
    """A required column is missing from an input table."""
