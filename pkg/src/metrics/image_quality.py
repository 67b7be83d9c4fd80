"""Per-image quality metrics: PSNR and SSIM."""
from __future__ import annotations

import math

import torch
import torch.nn.functional as F

from ..utils.errors import InvalidRangeError, ValidationError
from ..utils.validation import validate_same_shape

PSNR_IDENTICAL = math.inf


def psnr(a: torch.Tensor, b: torch.Tensor, data_range: float) -> float:
    """
    10 · log10(data_range² / MSE) in decibels; ``inf`` when the images are equal.
    """
    validate_same_shape(a, b, "psnr inputs")
    if data_range <= 0:
        raise InvalidRangeError(f"data_range must be positive, got {data_range}")
    mse = float(torch.mean((a.to(torch.float64) - b.to(torch.float64)) ** 2))
    if mse == 0.0:
        return PSNR_IDENTICAL
    return 10.0 * math.log10(data_range ** 2 / mse)


def gaussian_window(size: int = 11, sigma: float = 1.5) -> torch.Tensor:
    """Normalized 2-D Gaussian window (float64)."""
    coords = torch.arange(size, dtype=torch.float64) - (size - 1) / 2.0
    g = torch.exp(-0.5 * (coords / sigma) ** 2)
    g = g / g.sum()
    return torch.outer(g, g)


def ssim(
    a: torch.Tensor,
    b: torch.Tensor,
    data_range: float = 1.0,
    k1: float = 0.01,
    k2: float = 0.03,
    window: int = 11,
    sigma: float = 1.5,
) -> float:
    """
    Mean structural similarity of (C, H, W) or (H, W) images.

    Local statistics use a Gaussian window over the valid region only,
    population (not sample) variances, and the per-channel means are
    averaged.

    Raises:
        ValidationError: the images are smaller than the window.
    """
    validate_same_shape(a, b, "ssim inputs")
    if a.dim() == 2:
        a, b = a[None], b[None]
    if a.shape[-1] < window or a.shape[-2] < window:
        raise ValidationError(f"image {tuple(a.shape[-2:])} is smaller than the {window}x{window} SSIM window")

    x = a.to(torch.float64)[:, None]
    y = b.to(torch.float64)[:, None]
    w = gaussian_window(window, sigma).to(x.device)[None, None]

    def filt(z: torch.Tensor) -> torch.Tensor:
        return F.conv2d(z, w)

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    ux, uy = filt(x), filt(y)
    vx = filt(x * x) - ux * ux
    vy = filt(y * y) - uy * uy
    vxy = filt(x * y) - ux * uy

    num = (2 * ux * uy + c1) * (2 * vxy + c2)
    den = (ux * ux + uy * uy + c1) * (vx + vy + c2)
    per_channel = (num / den).mean(dim=(-3, -2, -1))
    return float(per_channel.mean())
