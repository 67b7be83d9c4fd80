"""Aggregated evaluation report and the metric pipeline over image sets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import torch

from ..data.tiles import to_unit_range
from ..utils.errors import ShapeMismatchError, ValidationError
from .embedder import FeatureEmbedder
from .frechet import frechet_distance, gaussian_stats
from .image_quality import psnr, ssim

FID_FLOOR = -1e-6


@dataclass
class MetricReport:
    """PSNR/SSIM per tile plus the set-level FID-proxy."""
    tile_ids: list[str]
    psnr_db: list[float]
    ssim: list[float]
    fid_proxy: float | None
    embedder_id: str | None
    method: str = ""
    n_evals: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.tile_ids)
        if len(self.psnr_db) != n or len(self.ssim) != n:
            raise ShapeMismatchError(
                f"per-tile lists disagree: {n} ids, {len(self.psnr_db)} psnr, {len(self.ssim)} ssim"
            )
        if self.fid_proxy is not None and self.fid_proxy < FID_FLOOR:
            raise ValidationError(f"fid_proxy {self.fid_proxy} below numerical floor")

    @property
    def n_tiles(self) -> int:
        return len(self.tile_ids)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean(self.psnr_db)) if self.psnr_db else math.nan

    @property
    def mean_ssim(self) -> float:
        return float(np.mean(self.ssim)) if self.ssim else math.nan

    def to_rows(self) -> list[dict]:
        return [
            {"tile_id": tid, "psnr_db": p, "ssim": s}
            for tid, p, s in zip(self.tile_ids, self.psnr_db, self.ssim)
        ]

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(self.to_rows(), columns=["tile_id", "psnr_db", "ssim"])

    def summary(self) -> dict:
        return {
            "method": self.method,
            "n_evals": self.n_evals,
            "n_tiles": self.n_tiles,
            "psnr_db": self.mean_psnr,
            "ssim": self.mean_ssim,
            "fid_proxy": self.fid_proxy,
            "embedder_id": self.embedder_id,
            **self.extra,
        }


def fid_proxy(real: torch.Tensor, fake: torch.Tensor, embedder: FeatureEmbedder) -> float:
    """
    Fréchet distance between Gaussian fits of embedder features.

    Raises:
        InsufficientSamplesError: a set has at most ``embedder.dim`` images.
    """
    mu_r, cov_r = gaussian_stats(embedder.embed(real))
    mu_f, cov_f = gaussian_stats(embedder.embed(fake))
    return frechet_distance(mu_r, cov_r, mu_f, cov_f)


def evaluate_images(
    preds: torch.Tensor,
    targets: torch.Tensor,
    ids: list[str],
    embedder: FeatureEmbedder | None = None,
    method: str = "",
    n_evals: int | None = None,
) -> MetricReport:
    """
    Score predictions against ground truth (both in [-1, 1]).

    PSNR and SSIM are computed per tile on images mapped to [0, 1]
    (data range 1). The FID-proxy is skipped when there are too few tiles
    for a full-rank covariance or no embedder is given.
    """
    if preds.shape != targets.shape:
        raise ShapeMismatchError(f"predictions {tuple(preds.shape)} vs targets {tuple(targets.shape)}")
    if len(ids) != preds.shape[0]:
        raise ShapeMismatchError(f"{len(ids)} ids for {preds.shape[0]} images")
    p_unit = to_unit_range(preds.detach().cpu().to(torch.float64))
    t_unit = to_unit_range(targets.detach().cpu().to(torch.float64))
    psnrs = [psnr(p, t, 1.0) for p, t in zip(p_unit, t_unit)]
    ssims = [ssim(p, t, 1.0) for p, t in zip(p_unit, t_unit)]

    fid = None
    embedder_id = None
    if embedder is not None:
        embedder_id = embedder.id
        if preds.shape[0] > embedder.dim:
            fid = fid_proxy(targets, preds, embedder)
    return MetricReport(
        tile_ids=list(ids),
        psnr_db=psnrs,
        ssim=ssims,
        fid_proxy=fid,
        embedder_id=embedder_id,
        method=method,
        n_evals=n_evals,
    )
