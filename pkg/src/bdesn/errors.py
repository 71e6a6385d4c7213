"""Exception types raised across the package."""


class BdesnError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(BdesnError, ValueError):
    """Array dimensions do not match what an operation expects."""


class ParameterError(BdesnError, ValueError):
    """A hyperparameter or argument is outside its valid range."""


class InputError(BdesnError, ValueError):
    """Input data is empty, inconsistent or otherwise unusable."""


class FormatError(InputError):
    """A data or config file does not follow the expected format."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        parts = []
        if path is not None:
            parts.append(str(path))
        if line is not None:
            parts.append(f"line {line}")
        where = ", ".join(parts)
        super().__init__(f"{where}: {message}" if where else message)


class ImputationError(InputError):
    """A variable has no observed training value to impute from."""


class StratificationError(InputError):
    """A stratified split would leave a class without samples."""


class ConvergenceError(BdesnError, RuntimeError):
    """An iterative method did not converge; ``estimate`` holds the last iterate."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SingularityError(BdesnError, ArithmeticError):
    """A linear system is singular or numerically unsolvable."""


class DegenerateDrawError(BdesnError, RuntimeError):
    """Random reservoir weights came out degenerate on every substream tried."""


class DivergenceError(BdesnError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, learning_rate):
        self.epoch = epoch
        self.learning_rate = learning_rate
        super().__init__(
            f"non-finite training loss at epoch {epoch} "
            f"(learning_rate={learning_rate:g}); try a smaller learning rate"
        )
