"""Exception types shared across the package."""


class SLTError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(SLTError, ValueError):
    """Incompatible tensor extents."""


class ContractError(SLTError, ValueError):
    """A precondition of an operation was violated."""


class ConfigError(SLTError, ValueError):
    """Invalid hyperparameter combination."""


class NumericalError(SLTError, ArithmeticError):
    """A forward value or gradient became NaN or infinite."""


class FormatError(SLTError, ValueError):
    """A file does not follow its binary or text format."""


class SrtParseError(FormatError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
