"""Custom exceptions and error handling."""
import functools
from typing import Callable, Any

import structlog


class Sar2OptError(Exception):
    """Base exception for the project."""
    pass


class ValidationError(Sar2OptError):
    """Invalid input data or violated precondition."""
    pass


class InvalidRangeError(ValidationError):
    """A parameter lies outside its admissible range."""
    pass


class ShapeMismatchError(ValidationError):
    """Tensors that must agree in shape (or spatial size) do not."""
    pass


class StepRangeError(ValidationError):
    """A diffusion step index is outside the allowed range."""
    pass


class StepZeroError(StepRangeError):
    """The noise parameterization was evaluated at t = 0."""
    pass


class InsufficientSamplesError(ValidationError):
    """Not enough samples for a full-rank covariance estimate."""
    pass


class ConfigError(ValidationError):
    """Invalid run configuration."""
    pass


class NumericalHealthError(Sar2OptError):
    """NaN or Inf found in an output, loss or intermediate."""
    pass


class FrozenTeacherError(Sar2OptError):
    """The teacher is trainable or in train mode during distillation."""
    pass


class DataError(Sar2OptError):
    """Unreadable or unusable image data, or an unwritable destination."""
    pass


class CheckpointError(Sar2OptError):
    """Checkpoint cannot be used: bad version, wrong role, schedule mismatch."""
    pass


def error_handler(default_return: Any = None, reraise: bool = False):
    """
    Decorator for handling errors gracefully.

    Project errors are logged as a single event; anything else is logged
    with its traceback.

    Args:
        default_return: Value to return on error.
        reraise: Whether to re-raise the exception after logging.
    """
    def decorator(func: Callable) -> Callable:
        logger = structlog.get_logger(func.__module__)

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Sar2OptError as e:
                logger.error("operation_failed", operation=func.__name__,
                             error_type=type(e).__name__, error=str(e))
                if reraise:
                    raise
                return default_return
            except Exception as e:
                logger.exception("unexpected_error", operation=func.__name__,
                                 error_type=type(e).__name__)
                if reraise:
                    raise
                return default_return
        return wrapper
    return decorator
