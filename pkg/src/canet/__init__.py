"""CANet: patch-based forecasting with non-stationary adaptive normalization."""
from .checkpoint import load, save
from .data import SeriesFrame, WindowBatch, adf_statistic, chrono_split, load_csv, window
from .errors import CanetError, CheckpointError, ConfigError, ContractError, DataError, DimensionError, NumericError
from .model import CANet, ModelConfig
from .tensor import Tensor, no_grad
from .train import TrainConfig, evaluate, prepare, train

__all__ = [
    "CANet",
    "ModelConfig",
    "TrainConfig",
    "Tensor",
    "no_grad",
    "SeriesFrame",
    "WindowBatch",
    "load_csv",
    "chrono_split",
    "window",
    "adf_statistic",
    "train",
    "evaluate",
    "prepare",
    "save",
    "load",
    "CanetError",
    "CheckpointError",
    "ConfigError",
    "ContractError",
    "DataError",
    "DimensionError",
    "NumericError",
]
