"""Exception types shared across the toolkit (the CLI maps them to exit codes)."""


class DataError(ValueError):
    """Invalid input data, configuration or file contents."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite values."""
