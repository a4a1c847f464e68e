"""Exception types shared across the pipeline stages."""


class TouchAuthError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(TouchAuthError, ValueError):
    """A configuration value is missing or out of range."""


class DataError(TouchAuthError):
    """Input data cannot be used for the requested stage."""


class SchemaError(DataError):
    """A CSV header does not match the expected columns."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RowValueError(DataError, ValueError):
    """A CSV field could not be parsed; carries the offending line number."""

    def __init__(self, message, line):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DegenerateSwipe(DataError):
    pass


class InsufficientData(DataError):
    pass


class ImbalanceError(DataError):
    pass


class EmptySource(DataError):
    pass


class MissingDataset(DataError):
    pass


class EmptyScores(DataError):
    pass


class DegenerateLabels(DataError):
    pass


class DegenerateData(DataError):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


class DivergenceError(TouchAuthError, ArithmeticError):
    """GAN losses became non-finite."""


class SchemaVersionError(DataError):
    pass


class CorruptModel(DataError):
    pass


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration cap."""
