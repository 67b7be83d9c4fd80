"""Input validation utilities."""
from __future__ import annotations

from typing import TYPE_CHECKING

import torch

from .errors import (
    NumericalHealthError,
    ShapeMismatchError,
    StepRangeError,
    ValidationError,
)

if TYPE_CHECKING:
    from .config import DenoiserConfig


def validate_same_shape(a: torch.Tensor, b: torch.Tensor, what: str = "tensors") -> bool:
    """
    Require two tensors to have identical shapes.

    Raises:
        ShapeMismatchError: If the shapes differ.
    """
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{what} differ in shape: {tuple(a.shape)} vs {tuple(b.shape)}")
    return True


def validate_spatial_match(a: torch.Tensor, b: torch.Tensor, what: str = "images") -> bool:
    """
    Require matching batch and spatial dimensions (channels may differ).

    Both tensors are ``(..., C, H, W)``.
    """
    if a.dim() != b.dim() or a.dim() < 3:
        raise ShapeMismatchError(f"{what} must be (..., C, H, W) with equal rank, got {a.dim()} and {b.dim()}")
    if a.shape[-2:] != b.shape[-2:]:
        raise ShapeMismatchError(
            f"{what} differ spatially: {tuple(a.shape[-2:])} vs {tuple(b.shape[-2:])}"
        )
    if a.shape[:-3] != b.shape[:-3]:
        raise ShapeMismatchError(f"{what} differ in batch size: {tuple(a.shape[:-3])} vs {tuple(b.shape[:-3])}")
    return True


def validate_step(t: int | torch.Tensor, low: int, high: int, what: str = "step") -> bool:
    """
    Require every step index to lie in ``[low, high]``.

    Raises:
        StepRangeError: If any index falls outside the range.
    """
    if isinstance(t, torch.Tensor):
        if t.numel() == 0:
            return True
        t_lo, t_hi = int(t.min()), int(t.max())
    else:
        t_lo = t_hi = int(t)
    if t_lo < low or t_hi > high:
        raise StepRangeError(f"{what} must lie in [{low}, {high}], got range [{t_lo}, {t_hi}]")
    return True


def check_finite(x: torch.Tensor, stage: str, **diagnostics) -> torch.Tensor:
    """
    Raise NumericalHealthError if ``x`` holds NaN or Inf.

    ``diagnostics`` (step, iteration, ...) are appended to the message.
    """
    if not torch.isfinite(x).all():
        n_bad = int((~torch.isfinite(x)).sum())
        details = ", ".join(f"{k}={v}" for k, v in diagnostics.items())
        raise NumericalHealthError(
            f"non-finite values in {stage}: {n_bad}/{x.numel()} entries"
            + (f" ({details})" if details else "")
        )
    return x


def validate_denoiser_config(config: DenoiserConfig) -> bool:
    """Check the structural constraints of a denoiser configuration."""
    if config.target_channels < 1 or config.condition_channels < 1:
        raise ValidationError("target_channels and condition_channels must be >= 1")
    if config.tile_size % (2 ** config.depth) != 0:
        raise ValidationError(
            f"tile_size {config.tile_size} is not divisible by 2^depth = {2 ** config.depth}"
        )
    return True
