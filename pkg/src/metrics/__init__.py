"""Image-quality metrics: PSNR, SSIM and a Fréchet-distance proxy for FID."""
from .image_quality import psnr, ssim
from .frechet import frechet_distance, gaussian_stats
from .embedder import FeatureEmbedder, RandomConvEmbedder
from .report import MetricReport, evaluate_images, fid_proxy

__all__ = [
    "psnr", "ssim",
    "frechet_distance", "gaussian_stats",
    "FeatureEmbedder", "RandomConvEmbedder",
    "MetricReport", "evaluate_images", "fid_proxy",
]
