"""Fréchet distance between Gaussians fitted to feature sets."""
from __future__ import annotations

import numpy as np
from scipy import linalg

from ..utils.errors import InsufficientSamplesError, ShapeMismatchError, ValidationError


def _check_cov(cov: np.ndarray, name: str) -> np.ndarray:
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    if cov.shape[0] != cov.shape[1]:
        raise ShapeMismatchError(f"{name} must be square, got {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=1e-8, atol=1e-10):
        raise ValidationError(f"{name} is not symmetric")
    return cov


def psd_sqrt(cov: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix; tiny negative eigenvalues are clipped to 0."""
    w, v = linalg.eigh((cov + cov.T) / 2.0)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def frechet_distance(mu1: np.ndarray, cov1: np.ndarray, mu2: np.ndarray, cov2: np.ndarray) -> float:
    """
    |μ1 − μ2|² + Tr(C1 + C2 − 2 (C1 C2)^{1/2}).

    Tr((C1 C2)^{1/2}) is computed as the trace of the square root of the
    symmetric matrix C1^{1/2} C2 C1^{1/2}, which has the same eigenvalues.

    Raises:
        ValidationError: a covariance is not symmetric.
        ShapeMismatchError: dimensions disagree.
    """
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=np.float64))
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=np.float64))
    cov1 = _check_cov(cov1, "cov1")
    cov2 = _check_cov(cov2, "cov2")
    d = mu1.shape[0]
    if mu2.shape != (d,) or cov1.shape != (d, d) or cov2.shape != (d, d):
        raise ShapeMismatchError(
            f"incongruent Gaussians: mu1 {mu1.shape}, cov1 {cov1.shape}, mu2 {mu2.shape}, cov2 {cov2.shape}"
        )
    s1 = psd_sqrt(cov1)
    middle = s1 @ cov2 @ s1
    eig = linalg.eigvalsh((middle + middle.T) / 2.0)
    tr_covmean = float(np.sum(np.sqrt(np.clip(eig, 0.0, None))))
    diff = mu1 - mu2
    return float(diff @ diff + np.trace(cov1) + np.trace(cov2) - 2.0 * tr_covmean)


def gaussian_stats(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of an (N, D) feature matrix."""
    features = np.asarray(features, dtype=np.float64)
    n, d = features.shape
    if n < d + 1:
        raise InsufficientSamplesError(f"{n} samples cannot give a full-rank {d}x{d} covariance (need {d + 1})")
    return features.mean(axis=0), np.cov(features, rowvar=False)
