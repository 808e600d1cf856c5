"""Exception hierarchy.

Errors fall in three families, each mapped to a CLI exit code:

* ``ConfigError`` (exit 2) for invalid hyperparameters or flags,
* ``DataError`` (exit 3) for malformed or incompatible input data,
* ``NumericError`` (exit 4) for non-finite values and broken numeric
  invariants.
"""


class CastorError(Exception):
    exit_code = 1


class ConfigError(CastorError, ValueError):
    exit_code = 2


class DataError(CastorError, ValueError):
    exit_code = 3


class NumericError(CastorError, ArithmeticError):
    exit_code = 4


class InvalidShapeletLength(ConfigError):
    pass


class InvalidFoldCount(ConfigError):
    pass


class ParseError(DataError):
    def __init__(self, path, line, column, token):
        self.path = path
        self.line = line
        self.column = column
        self.token = token
        super().__init__(
            f"{path}:{line}: column {column}: cannot parse {token!r} as a number"
        )


class RaggedDataset(DataError):
    pass


class InvalidDataset(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class SeriesLengthMismatch(DataError):
    def __init__(self, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"expected series of length {expected}, got {actual}")


class ShapeletLongerThanSeries(DataError):
    pass


class ShapeletTooLong(DataError):
    pass


class SubsequenceOutOfBounds(DataError, IndexError):
    pass


class FeatureDimensionMismatch(DataError):
    pass


class InsufficientData(DataError):
    pass


class ModelFormatError(DataError):
    pass


class InvalidFeatures(NumericError):
    pass


class InternalPaddingError(NumericError):
    pass
