"""
Result analysis and visualization.

Quality-versus-steps curves, latency plots, qualitative image grids and
the monotonicity check over an evaluation sweep.
"""
from __future__ import annotations

from pathlib import Path
from typing import List, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns
import torch
from PIL import Image

from ..data.tiles import to_uint8
from ..utils.errors import ShapeMismatchError, ValidationError, error_handler
from ..utils.logging import benchmark_logger

logger = benchmark_logger()

GRID_PAD = 2


def validate_dataframe(df: pd.DataFrame, required_cols: List[str]) -> bool:
    """Check if DataFrame has required columns."""
    missing = [col for col in required_cols if col not in df.columns]
    if missing:
        logger.warning("missing_columns", missing=missing)
        return False
    return True


def _as_rgb(tile: torch.Tensor) -> np.ndarray:
    """(C, H, W) in [-1, 1] → (H, W, 3) uint8; single-channel tiles are repeated."""
    arr = to_uint8(tile)
    if arr.shape[-1] == 1:
        arr = np.repeat(arr, 3, axis=-1)
    elif arr.shape[-1] != 3:
        arr = np.repeat(arr[..., :1], 3, axis=-1)
    return arr


def emit_grid(rows: Sequence[Sequence[torch.Tensor]], path: Path) -> Path:
    """
    Write a PNG mosaic: one row per tile, one column per image kind.

    Every cell is a (C, H, W) tensor in [-1, 1]; all cells share H and W.
    The output bytes depend only on the input tensors.
    """
    if not rows or not rows[0]:
        raise ValidationError("emit_grid needs at least one row and one column")
    n_cols = len(rows[0])
    if any(len(r) != n_cols for r in rows):
        raise ShapeMismatchError("every grid row must have the same number of cells")
    h, w = rows[0][0].shape[-2:]
    if any(cell.shape[-2:] != (h, w) for r in rows for cell in r):
        raise ShapeMismatchError("grid cells differ in spatial size")

    canvas = np.full(
        (len(rows) * (h + GRID_PAD) + GRID_PAD, n_cols * (w + GRID_PAD) + GRID_PAD, 3),
        255,
        dtype=np.uint8,
    )
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            top = GRID_PAD + i * (h + GRID_PAD)
            left = GRID_PAD + j * (w + GRID_PAD)
            canvas[top:top + h, left:left + w] = _as_rgb(cell.detach().cpu().float())

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(canvas).save(path, format="PNG", optimize=False)
    return path


def monotonicity_violations(
    summary: pd.DataFrame,
    tolerance_db: float = 0.1,
    tolerance_ssim: float = 0.005,
) -> list[dict]:
    """
    Steps of a quality sweep where quality dropped by more than the tolerance.

    ``summary`` needs columns n_evals, psnr_db and ssim. Each returned entry
    names the metric, the two step counts and the size of the drop.
    """
    if not validate_dataframe(summary, ["n_evals", "psnr_db", "ssim"]):
        return []
    ordered = summary.sort_values("n_evals").reset_index(drop=True)
    violations = []
    for metric, tol in (("psnr_db", tolerance_db), ("ssim", tolerance_ssim)):
        values = ordered[metric].to_numpy(dtype=float)
        steps = ordered["n_evals"].to_numpy()
        for k in range(1, len(values)):
            drop = values[k - 1] - values[k]
            if np.isfinite(drop) and drop > tol:
                violations.append({
                    "metric": metric,
                    "from_n_evals": int(steps[k - 1]),
                    "to_n_evals": int(steps[k]),
                    "drop": float(drop),
                })
    for v in violations:
        logger.warning("quality_not_monotone", **v)
    return violations


@error_handler(default_return=None)
def plot_quality_curve(summary: pd.DataFrame, path: Path, title: str = "Quality vs. evaluations") -> Path | None:
    """PSNR and SSIM against the evaluation count (log x axis)."""
    if summary.empty or not validate_dataframe(summary, ["n_evals", "psnr_db", "ssim"]):
        logger.warning("empty_quality_summary")
        return None
    sns.set_theme(style="whitegrid")
    ordered = summary.sort_values("n_evals")
    fig, (ax_psnr, ax_ssim) = plt.subplots(1, 2, figsize=(10, 4))
    try:
        ax_psnr.plot(ordered["n_evals"], ordered["psnr_db"], marker="o")
        ax_psnr.set_xlabel("Denoiser evaluations")
        ax_psnr.set_ylabel("PSNR (dB)")
        ax_ssim.plot(ordered["n_evals"], ordered["ssim"], marker="o", color="tab:orange")
        ax_ssim.set_xlabel("Denoiser evaluations")
        ax_ssim.set_ylabel("SSIM")
        for ax in (ax_psnr, ax_ssim):
            if ordered["n_evals"].min() > 0:
                ax.set_xscale("log", base=2)
            ax.grid(True, alpha=0.3)
        fig.suptitle(title)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, dpi=150, bbox_inches="tight")
        logger.info("plot_saved", path=str(path))
        return path
    finally:
        plt.close(fig)


@error_handler(default_return=None)
def plot_latency(df: pd.DataFrame, path: Path) -> Path | None:
    """Median latency per sampler, with the spread across repetitions."""
    if df.empty or not validate_dataframe(df, ["method", "median_ms", "std_ms"]):
        logger.warning("empty_latency_table")
        return None
    sns.set_theme(style="whitegrid")
    ordered = df.sort_values("median_ms")
    fig, ax = plt.subplots(figsize=(8, 5))
    try:
        ax.bar(ordered["method"], ordered["median_ms"], yerr=ordered["std_ms"], capsize=4)
        ax.set_yscale("log")
        ax.set_xlabel("Sampler")
        ax.set_ylabel("Median latency per batch (ms)")
        ax.set_title("Sampling latency")
        ax.tick_params(axis="x", rotation=45)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, dpi=150, bbox_inches="tight")
        logger.info("plot_saved", path=str(path))
        return path
    finally:
        plt.close(fig)


@error_handler(default_return=None)
def plot_training_curves(records: list[dict], path: Path, keys: Sequence[str]) -> Path | None:
    """Loss curves from train_log.jsonl records."""
    df = pd.DataFrame(records)
    keys = [k for k in keys if k in df.columns]
    if df.empty or "iteration" not in df.columns or not keys:
        return None
    sns.set_theme(style="whitegrid")
    fig, ax = plt.subplots(figsize=(8, 4))
    try:
        for key in keys:
            series = pd.to_numeric(df[key], errors="coerce")
            ax.plot(df["iteration"], series, label=key)
        ax.set_xlabel("Iteration")
        ax.set_ylabel("Loss")
        ax.legend()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, dpi=150, bbox_inches="tight")
        return path
    finally:
        plt.close(fig)
