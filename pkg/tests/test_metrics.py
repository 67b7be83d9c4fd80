"""Tests for PSNR, SSIM, the Fréchet distance and the metric report."""
import math

import numpy as np
import pytest
import torch
from scipy import linalg
from skimage.metrics import peak_signal_noise_ratio, structural_similarity

from src.metrics import (
    MetricReport,
    RandomConvEmbedder,
    evaluate_images,
    fid_proxy,
    frechet_distance,
    gaussian_stats,
    psnr,
    ssim,
)
from src.utils.errors import (
    InsufficientSamplesError,
    InvalidRangeError,
    ShapeMismatchError,
    ValidationError,
)


def _pair(shape=(3, 16, 16), seed=0):
    gen = torch.Generator().manual_seed(seed)
    a = torch.rand(shape, generator=gen, dtype=torch.float64)
    b = (a + 0.1 * torch.randn(shape, generator=gen, dtype=torch.float64)).clamp(0, 1)
    return a, b


class TestPSNR:
    """Test peak signal-to-noise ratio."""

    def test_constant_difference(self):
        """A constant error of 10 on the 8-bit range gives 20·log10(25.5) dB."""
        a = torch.zeros(3, 8, 8, dtype=torch.float64)

        assert psnr(a, a + 10.0, data_range=255.0) == pytest.approx(20 * math.log10(25.5), abs=1e-9)
        assert psnr(a, a + 10.0, data_range=255.0) == pytest.approx(28.13, abs=0.01)

    def test_identical_is_infinite(self):
        a, _ = _pair()

        assert psnr(a, a, 1.0) == math.inf

    def test_matches_reference(self):
        a, b = _pair()

        assert psnr(a, b, 1.0) == pytest.approx(
            peak_signal_noise_ratio(a.numpy(), b.numpy(), data_range=1.0), abs=1e-6
        )

    def test_invalid_inputs(self):
        a, b = _pair()
        with pytest.raises(InvalidRangeError):
            psnr(a, b, 0.0)
        with pytest.raises(ShapeMismatchError):
            psnr(a, b[:, :8], 1.0)


class TestSSIM:
    """Test structural similarity."""

    def test_identical_is_one(self):
        a, _ = _pair()

        assert ssim(a, a, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_symmetric(self):
        a, b = _pair()

        assert ssim(a, b, 1.0) == pytest.approx(ssim(b, a, 1.0), abs=1e-12)

    def test_matches_reference_grayscale(self):
        """16×16 grayscale pair against an independent Gaussian-window implementation."""
        a, b = _pair(shape=(16, 16), seed=1)
        reference = structural_similarity(
            a.numpy(), b.numpy(), data_range=1.0, gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False,
        )

        assert ssim(a, b, 1.0) == pytest.approx(reference, abs=1e-6)

    def test_matches_reference_color(self):
        a, b = _pair(shape=(3, 16, 16), seed=2)
        reference = structural_similarity(
            a.numpy(), b.numpy(), data_range=1.0, gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False, channel_axis=0,
        )

        assert ssim(a, b, 1.0) == pytest.approx(reference, abs=1e-6)

    def test_bounded(self):
        a, _ = _pair()

        assert -1.0 <= ssim(a, 1.0 - a, 1.0) <= 1.0

    def test_tile_smaller_than_window(self):
        a, b = _pair(shape=(3, 8, 8))

        with pytest.raises(ValidationError):
            ssim(a, b, 1.0)


class TestFrechet:
    """Test the Fréchet distance between Gaussians."""

    def test_two_dimensional_example(self):
        """μ1 = 0, μ2 = (1, 1), C1 = I, C2 = 4I → 2 + 2·(1 + 4 − 4) = 4."""
        d = frechet_distance(np.zeros(2), np.eye(2), np.ones(2), 4 * np.eye(2))

        assert d == pytest.approx(4.0, abs=1e-12)

    def test_identical_gaussians(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            m = rng.normal(size=(6, 6))
            cov = m @ m.T + 0.1 * np.eye(6)
            mu = rng.normal(size=6)
            assert abs(frechet_distance(mu, cov, mu, cov)) < 1e-8

    def test_matches_sqrtm_reference(self):
        rng = np.random.default_rng(1)
        m1, m2 = rng.normal(size=(2, 4, 4))
        c1, c2 = m1 @ m1.T + np.eye(4), m2 @ m2.T + np.eye(4)
        mu1, mu2 = rng.normal(size=(2, 4))
        covmean = linalg.sqrtm(c1 @ c2).real
        reference = float((mu1 - mu2) @ (mu1 - mu2) + np.trace(c1 + c2 - 2 * covmean))

        assert frechet_distance(mu1, c1, mu2, c2) == pytest.approx(reference, abs=1e-6)

    def test_asymmetric_covariance_rejected(self):
        with pytest.raises(ValidationError):
            frechet_distance(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2), np.eye(2))

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            frechet_distance(np.zeros(2), np.eye(2), np.zeros(3), np.eye(3))

    def test_stats_need_enough_samples(self):
        with pytest.raises(InsufficientSamplesError):
            gaussian_stats(np.zeros((4, 4)))


class TestEmbedderAndReport:
    """Test the FID-proxy embedder and the aggregated report."""

    def test_embedder_is_deterministic(self):
        images = torch.rand(4, 3, 16, 16) * 2 - 1
        a = RandomConvEmbedder(seed=0).embed(images)
        b = RandomConvEmbedder(seed=0).embed(images)

        assert a.shape == (4, 32)
        assert a.dtype == np.float64
        assert np.array_equal(a, b)
        assert RandomConvEmbedder(seed=3).id == "randconv-f32-s3"

    def test_fid_proxy_of_same_set(self):
        images = torch.rand(40, 3, 16, 16, generator=torch.Generator().manual_seed(0)) * 2 - 1

        assert fid_proxy(images, images, RandomConvEmbedder(seed=0)) < 1e-3

    def test_report_means_and_frame(self):
        report = MetricReport(tile_ids=["a", "b"], psnr_db=[20.0, 30.0], ssim=[0.5, 0.7], fid_proxy=None,
                              embedder_id=None, method="consistency", n_evals=2)

        assert report.mean_psnr == 25.0
        assert report.mean_ssim == pytest.approx(0.6)
        assert list(report.to_dataframe().columns) == ["tile_id", "psnr_db", "ssim"]
        assert report.summary()["n_evals"] == 2

    def test_report_rejects_ragged_lists(self):
        with pytest.raises(ShapeMismatchError):
            MetricReport(tile_ids=["a"], psnr_db=[], ssim=[0.1], fid_proxy=None, embedder_id=None)

    def test_evaluate_images(self):
        gen = torch.Generator().manual_seed(0)
        targets = torch.rand(5, 3, 16, 16, generator=gen) * 2 - 1
        preds = (targets + 0.05 * torch.randn(5, 3, 16, 16, generator=gen)).clamp(-1, 1)

        report = evaluate_images(preds, targets, list("abcde"), embedder=RandomConvEmbedder(), n_evals=1)

        assert report.n_tiles == 5
        assert report.fid_proxy is None
        assert report.embedder_id == "randconv-f32-s0"
        unit = ((preds[0].double() + 1) / 2, (targets[0].double() + 1) / 2)
        assert report.psnr_db[0] == pytest.approx(psnr(*unit, 1.0))

    def test_evaluate_images_with_fid(self):
        gen = torch.Generator().manual_seed(0)
        targets = torch.rand(40, 3, 16, 16, generator=gen) * 2 - 1

        report = evaluate_images(targets.clone(), targets, [str(i) for i in range(40)], embedder=RandomConvEmbedder())

        assert report.fid_proxy is not None and report.fid_proxy < 1e-3
        assert all(p == math.inf for p in report.psnr_db)
