"""Exception hierarchy shared by every canet module."""


class CanetError(Exception):
    """Base class for errors raised by canet."""


class ConfigError(CanetError, ValueError):
    """Invalid configuration or hyperparameter."""


class DimensionError(CanetError, ValueError):
    """Tensor shapes are incompatible."""


class ContractError(CanetError, ValueError):
    """A precondition of an operation was violated."""


class DataError(CanetError, ValueError):
    """Malformed input data (CSV cells, ragged rows, short series)."""


class CheckpointError(CanetError, IOError):
    """Checkpoint file is malformed or does not match the model."""


class NumericError(CanetError, ArithmeticError):
    """Non-finite values appeared during training or evaluation."""
