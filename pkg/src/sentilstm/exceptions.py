"""Exception hierarchy shared across the pipeline.

Every error carries an ``error_class`` string; the CLI prints it as the
first token of its one-line failure message and maps it to an exit code.
"""


class SentiLSTMError(Exception):
    error_class = "error"
    exit_code = 1


class ArgumentError(SentiLSTMError, ValueError):
    error_class = "argument"
    exit_code = 2


class ConfigError(SentiLSTMError, ValueError):
    error_class = "config"
    exit_code = 2

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ArchitectureMismatchError(ConfigError):
    error_class = "architecture-mismatch"


class FormatError(SentiLSTMError, ValueError):
    error_class = "format"
    exit_code = 3

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IoError(SentiLSTMError, OSError):
    error_class = "io"
    exit_code = 3


class DegenerateSeriesError(SentiLSTMError, ValueError):
    error_class = "degenerate-series"
    exit_code = 3


class ScorerError(SentiLSTMError, RuntimeError):
    error_class = "scorer"
    exit_code = 3

    def __init__(self, message, headline_id=None):
        self.headline_id = headline_id
        super().__init__(f"headline {headline_id!r}: {message}")


class NumericError(SentiLSTMError, ArithmeticError):
    error_class = "numeric"
    exit_code = 4


class DivisionByZeroError(NumericError, ZeroDivisionError):
    error_class = "division-by-zero"

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class ShapeError(SentiLSTMError, ValueError):
    error_class = "shape"
    exit_code = 2


class StateError(SentiLSTMError, RuntimeError):
    error_class = "state"
    exit_code = 4
