"""
Paired tiles: loading, normalization and channel stacking.

Images are float tensors shaped (C, H, W) with values in [-1, 1]; a pixel
v of bit-depth maximum v_max maps to 2 * v / v_max - 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from ..utils.errors import DataError, ShapeMismatchError
from ..utils.validation import validate_spatial_match

SIXTEEN_BIT_MODES = {"I;16", "I;16B", "I;16L", "I;16N", "I"}


@dataclass
class PairedTile:
    """One co-registered (condition, target) pair."""
    cond: torch.Tensor
    target: torch.Tensor
    id: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.cond.shape[-2:] != self.target.shape[-2:]:
            raise ShapeMismatchError(
                f"tile {self.id}: cond {tuple(self.cond.shape)} and target {tuple(self.target.shape)} differ spatially"
            )


def concat_condition(x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
    """Stack along the channel axis as [x channels, cond channels]."""
    validate_spatial_match(x, cond, "image and condition")
    return torch.cat([x, cond], dim=-3)


def to_unit_range(x: torch.Tensor) -> torch.Tensor:
    """[-1, 1] → [0, 1]."""
    return (x + 1.0) / 2.0


def from_unit_range(x: torch.Tensor) -> torch.Tensor:
    """[0, 1] → [-1, 1]."""
    return x * 2.0 - 1.0


def to_uint8(x: torch.Tensor) -> np.ndarray:
    """(C, H, W) tensor in [-1, 1] → (H, W, C) uint8 array (C kept for 1 and 3)."""
    arr = to_unit_range(x.detach().to("cpu", torch.float64)).clamp(0.0, 1.0).numpy()
    arr = np.rint(arr * 255.0).astype(np.uint8)
    return np.transpose(arr, (1, 2, 0))


def _open(path: Path) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
        return img
    except (OSError, UnidentifiedImageError) as e:
        raise DataError(f"Cannot read image {path}: {e}") from e


def _channels(img: Image.Image) -> tuple[np.ndarray, float]:
    """Pixel array shaped (C, H, W) in float64 and the bit-depth maximum."""
    if img.mode in SIXTEEN_BIT_MODES:
        return np.asarray(img, dtype=np.float64)[None], 65535.0
    if img.mode == "P":
        img = img.convert("RGB")
    if img.mode == "RGBA":
        img = img.convert("RGB")
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    else:
        arr = np.transpose(arr, (2, 0, 1))
    return arr, 255.0


def _resize(unit: np.ndarray, tile_size: int | None) -> np.ndarray:
    """Bilinear resize of each channel (values in [0, 1]) to tile_size²."""
    if tile_size is None or unit.shape[-2:] == (tile_size, tile_size):
        return unit
    out = [
        np.asarray(
            Image.fromarray(ch.astype(np.float32)).resize((tile_size, tile_size), Image.Resampling.BILINEAR),
            dtype=np.float64,
        )
        for ch in unit
    ]
    return np.stack(out)


def _normalize(unit: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.clip(2.0 * unit - 1.0, -1.0, 1.0).astype(np.float32))


def load_condition(path: str | Path, tile_size: int | None, channels: int = 1) -> torch.Tensor:
    """
    Load a condition image as a (channels, H, W) tensor in [-1, 1].

    Color images are reduced to luminance when one channel is requested.
    """
    img = _open(Path(path))
    if channels == 1 and img.mode in {"RGB", "RGBA", "P"}:
        img = img.convert("L")
    arr, v_max = _channels(img)
    if arr.shape[0] != channels:
        raise DataError(f"Condition {path} has {arr.shape[0]} channels, expected {channels}")
    return _normalize(_resize(arr / v_max, tile_size))


def load_target(path: str | Path, tile_size: int | None, channels: int = 3) -> torch.Tensor:
    """
    Load an optical target as a (channels, H, W) tensor in [-1, 1].

    Raises:
        DataError: unreadable file or a grayscale image where color is expected.
    """
    img = _open(Path(path))
    arr, v_max = _channels(img)
    if arr.shape[0] != channels:
        raise DataError(f"Target {path} has {arr.shape[0]} channels, expected {channels} (grayscale targets are rejected)")
    return _normalize(_resize(arr / v_max, tile_size))


def load_pair(
    cond_path: str | Path,
    target_path: str | Path,
    tile_size: int | None,
    tile_id: str | None = None,
    condition_channels: int = 1,
    target_channels: int = 3,
    meta: dict | None = None,
) -> PairedTile:
    """
    Load and normalize one pair.

    ``tile_size=None`` keeps native resolution, in which case both images
    must already agree spatially.

    Raises:
        DataError: unreadable image or unusable channel count.
        ShapeMismatchError: cond and target differ spatially after resizing.
    """
    cond = load_condition(cond_path, tile_size, condition_channels)
    target = load_target(target_path, tile_size, target_channels)
    return PairedTile(
        cond=cond,
        target=target,
        id=tile_id or Path(target_path).stem,
        meta=meta or {},
    )


def save_png(x: torch.Tensor, path: Path) -> Path:
    """Write a (C, H, W) tensor in [-1, 1] as an 8-bit PNG."""
    path = Path(path)
    arr = to_uint8(x)
    img = Image.fromarray(arr[..., 0] if arr.shape[-1] == 1 else arr)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        img.save(path, format="PNG")
    except OSError as e:
        raise DataError(f"Cannot write {path}: {e}") from e
    return path
