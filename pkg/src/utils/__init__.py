"""Utilities package: configuration, logging, errors, timing, persistence."""
from .config import settings, Settings, TrainConfig, load_train_config
from .logging import get_logger, setup_logging
from .timer import Timer, TimingResult
from .serialization import ResultsSerializer
from .progress import ProgressTracker
from .experiment import ExperimentTracker
from .errors import (
    Sar2OptError,
    ValidationError,
    NumericalHealthError,
    FrozenTeacherError,
    DataError,
    CheckpointError,
)

__all__ = [
    "settings", "Settings", "TrainConfig", "load_train_config",
    "get_logger", "setup_logging",
    "Timer", "TimingResult",
    "ResultsSerializer",
    "ProgressTracker",
    "ExperimentTracker",
    "Sar2OptError", "ValidationError", "NumericalHealthError",
    "FrozenTeacherError", "DataError", "CheckpointError",
]
