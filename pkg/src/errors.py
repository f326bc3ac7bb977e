"""
File:       src/errors.py
Author:     Stackfuse developers
Brief:      Exception hierarchy. Every family carries the exit code the CLI reports for it.
"""
# Local modules imports
from src.config import EXIT_CONFIG_ERROR, EXIT_DATA_ERROR, EXIT_RUNTIME_ERROR


class StackfuseError(Exception):
    """Base class for all errors raised by this package"""
    exit_code: int = EXIT_RUNTIME_ERROR
    kind: str = "error"


class ConfigError(StackfuseError, ValueError):
    """Invalid configuration file, key, value or parameter"""
    exit_code = EXIT_CONFIG_ERROR
    kind = "config error"


class InvalidFractionError(ConfigError):
    """Split fractions that are not positive or don't sum to 1"""
    kind = "invalid fractions"


class DataError(StackfuseError, ValueError):
    """Anything wrong with the data a command was given"""
    exit_code = EXIT_DATA_ERROR
    kind = "data error"


class ParseError(DataError):
    """A CSV file that can't be turned into a Dataset; the message names the row"""
    kind = "parse error"

    def __init__(self, message: str, row: int = 0) -> None:
        self.row = row
        super().__init__(f"row {row}: {message}" if row else message)


class FormatError(DataError):
    """A malformed IDX, model or split-plan file"""
    kind = "format error"


class DimensionError(DataError):
    """Vector or matrix sizes that don't fit the network or dataset"""
    kind = "dimension error"


class InvalidDimensionError(DimensionError):
    """A layer size of zero"""
    kind = "invalid dimension"


class EmptySetError(DataError):
    kind = "empty set"


class InvalidLabelError(DataError):
    kind = "invalid label"


class MissingSubjectError(DataError):
    kind = "missing subject"


class InsufficientDataError(DataError):
    kind = "insufficient data"


class UndefinedClassError(DataError):
    """A class with no samples, for which recall is undefined"""
    kind = "undefined class"

    def __init__(self, class_index: int) -> None:
        self.class_index = class_index
        super().__init__(f"class {class_index} has no samples; its recall is undefined")


class TrainingError(StackfuseError, RuntimeError):
    """Training produced non-finite values"""
    exit_code = EXIT_RUNTIME_ERROR
    kind = "training error"
