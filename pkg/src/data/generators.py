"""
Procedural toy dataset of paired (speckled condition, color target) tiles.

Targets are color scenes: a base color, a linear gradient and a few
axis-aligned rectangles. Conditions mimic single-look-averaged SAR
intensity: target luminance times unit-mean gamma speckle, log-compressed
and min-max normalized per tile.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from ..utils.errors import DataError, InvalidRangeError
from ..utils.logging import data_logger
from .manifest import DatasetManifest, PairEntry, save_manifest

SPLIT_CODES = {"train": 0, "val": 1, "test": 2}
LUMA = np.array([0.299, 0.587, 0.114])
LOG_OFFSET = 0.05


def sample_speckle(rng: np.random.Generator, shape: tuple[int, ...], looks: float = 4.0) -> np.ndarray:
    """Unit-mean gamma speckle with variance 1 / looks."""
    if looks <= 0:
        raise InvalidRangeError(f"looks must be positive, got {looks}")
    return rng.gamma(shape=looks, scale=1.0 / looks, size=shape)


def luminance(rgb: np.ndarray) -> np.ndarray:
    """(H, W, 3) in [0, 1] → (H, W)."""
    return rgb @ LUMA


def render_scene(rng: np.random.Generator, tile_size: int) -> np.ndarray:
    """One color scene as an (H, W, 3) float array in [0, 1]."""
    img = np.broadcast_to(rng.uniform(0.2, 0.8, size=3), (tile_size, tile_size, 3)).copy()

    angle = rng.uniform(0.0, 2.0 * np.pi)
    yy, xx = np.mgrid[0:tile_size, 0:tile_size] / max(tile_size - 1, 1) - 0.5
    ramp = np.cos(angle) * xx + np.sin(angle) * yy
    img += ramp[..., None] * rng.uniform(-0.4, 0.4, size=3)

    lo, hi = max(tile_size // 8, 1), max(tile_size // 2, 2)
    for _ in range(int(rng.integers(2, 6))):
        h, w = rng.integers(lo, hi + 1, size=2)
        y0 = int(rng.integers(0, tile_size - h + 1))
        x0 = int(rng.integers(0, tile_size - w + 1))
        img[y0:y0 + h, x0:x0 + w] = rng.uniform(0.0, 1.0, size=3)

    return np.clip(img, 0.0, 1.0)


def speckled_condition(rgb: np.ndarray, rng: np.random.Generator, looks: float = 4.0) -> np.ndarray:
    """Log-compressed speckled luminance, min-max normalized to [0, 1]."""
    lum = luminance(rgb)
    log_img = np.log((lum + LOG_OFFSET) * sample_speckle(rng, lum.shape, looks))
    span = log_img.max() - log_img.min()
    if span <= 0:
        return np.zeros_like(log_img)
    return (log_img - log_img.min()) / span


def _quantize(unit: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(unit, 0.0, 1.0) * 255.0).astype(np.uint8)


def make_toy_dataset(
    root: Path,
    n_pairs: int,
    tile_size: int,
    seed: int,
    split: str = "train",
    looks: float = 4.0,
) -> DatasetManifest:
    """
    Generate ``n_pairs`` tiles under ``<root>/<split>/{cond,target}/<id>.png``
    and write ``<root>/manifest_<split>.json``.

    Output is a deterministic function of (n_pairs, tile_size, seed, split).

    Raises:
        InvalidRangeError: n_pairs < 1.
        DataError: the output directory cannot be written.
    """
    if n_pairs < 1:
        raise InvalidRangeError(f"n_pairs must be >= 1, got {n_pairs}")
    if split not in SPLIT_CODES:
        raise InvalidRangeError(f"split must be one of {sorted(SPLIT_CODES)}, got {split}")
    logger = data_logger()
    root = Path(root)
    cond_dir = root / split / "cond"
    target_dir = root / split / "target"
    try:
        cond_dir.mkdir(parents=True, exist_ok=True)
        target_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"Cannot create dataset directories under {root}: {e}") from e

    rng = np.random.default_rng([seed, SPLIT_CODES[split]])
    width = len(str(n_pairs - 1))
    pairs = []
    for i in range(n_pairs):
        tile_id = f"{split}_{i:0{width}d}"
        rgb = render_scene(rng, tile_size)
        cond = speckled_condition(rgb, rng, looks)
        cond_rel = f"{split}/cond/{tile_id}.png"
        target_rel = f"{split}/target/{tile_id}.png"
        try:
            Image.fromarray(_quantize(cond)).save(root / cond_rel, format="PNG")
            Image.fromarray(_quantize(rgb)).save(root / target_rel, format="PNG")
        except OSError as e:
            raise DataError(f"Cannot write tile {tile_id}: {e}") from e
        pairs.append(PairEntry(cond=cond_rel, target=target_rel, id=tile_id))

    manifest = DatasetManifest(root=Path("."), split=split, tile_size=tile_size, pairs=pairs)
    save_manifest(manifest, root / f"manifest_{split}.json")
    logger.info("toy_dataset_written", root=str(root), split=split, n_pairs=n_pairs, tile_size=tile_size, seed=seed)
    manifest.root = root.resolve()
    return manifest


def make_toy_splits(
    root: Path,
    n_train: int,
    n_test: int,
    tile_size: int,
    seed: int,
) -> dict[str, DatasetManifest]:
    """Write train and test splits (independent draws) under ``root``."""
    return {
        "train": make_toy_dataset(root, n_train, tile_size, seed, split="train"),
        "test": make_toy_dataset(root, n_test, tile_size, seed, split="test"),
    }
