"""Exception types shared across the toolkit.

Every error raised by the public API derives from DrivestyleError, so the
CLI can map any data/runtime failure to a nonzero exit in one place.
"""


class DrivestyleError(Exception):
    """Base class for all toolkit errors."""


class FieldOutOfRange(DrivestyleError):
    """A register field is NaN, infinite, or outside its allowed range."""

    def __init__(self, field: str, value, reason: str = "out of range"):
        self.field = field
        self.value = value
        super().__init__(f"{field}={value!r}: {reason}")


class EmptyDataset(DrivestyleError):
    """An operation requiring registers received none."""


class UnlabeledData(DrivestyleError):
    """Labels are required but missing (or mixed with unlabeled rows)."""


class DimensionMismatch(DrivestyleError):
    """Vector length does not match the expected feature dimensionality."""


class BadChecksum(DrivestyleError):
    """NMEA sentence checksum is missing or does not match."""


class UnsupportedSentence(DrivestyleError):
    """NMEA sentence type is not one this parser handles."""


class MalformedField(DrivestyleError):
    """An NMEA sentence field cannot be parsed."""


class ParseError(DrivestyleError):
    """A log file row is malformed.  Carries position and offending text."""

    def __init__(self, line: int, column: int, text: str, reason: str):
        self.line = line
        self.column = column
        self.text = text
        super().__init__(f"line {line}, column {column}: {reason}: {text!r}")


class TooFewGroups(DrivestyleError):
    """A k-sample test needs at least two groups."""


class EmptyGroup(DrivestyleError):
    """A statistical group contains no observations."""


class EmptySample(DrivestyleError):
    """A sample statistic was requested on an empty sample."""


class DomainError(DrivestyleError):
    """Argument outside the mathematical domain of the function."""


class MissingClass(DrivestyleError):
    """Training data lacks one of the classes required by the scheme."""


class SchemeMismatch(DrivestyleError):
    """Dataset labels are incompatible with the model's class scheme."""


class BadSize(DrivestyleError):
    """Requested split size is not strictly between 0 and the dataset size."""


class ConfigInvalid(DrivestyleError):
    """Simulation configuration violates its invariants."""


class ModelIoError(DrivestyleError):
    """Model file is missing, unreadable, or structurally broken."""


class FormatVersionMismatch(DrivestyleError):
    """Model file was written by an incompatible format version."""


class OutOfOrderRegister(DrivestyleError):
    """A streaming register arrived with a non-increasing timestamp."""
