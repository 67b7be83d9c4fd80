"""Shared fixtures: tiny networks, analytic Gaussian denoisers and a toy dataset."""
from types import SimpleNamespace

import pytest
import torch
import torch.nn as nn

from src.data.generators import make_toy_splits
from src.diffusion.consistency import c_out, c_skip
from src.diffusion.schedule import broadcast_coef, eps_from_x0, make_linear_schedule
from src.utils.config import ConsistencyParams, DenoiserConfig, load_train_config, settings

GAUSS_MEAN = 0.3
GAUSS_STD = 0.2


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow end-to-end tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def cpu_only(monkeypatch):
    """Keep every test on the CPU so bitwise comparisons hold."""
    monkeypatch.setattr(settings, "device", "cpu")


@pytest.fixture
def small_config():
    """Three-channel target, one-channel condition, 16x16 tiles."""
    return DenoiserConfig(target_channels=3, condition_channels=1, base_width=8, depth=2, tile_size=16)


@pytest.fixture
def tiny_config():
    """Smallest useful network; small enough for finite-difference checks."""
    return DenoiserConfig(
        target_channels=1, condition_channels=1, base_width=2, depth=1, time_embed_dim=4, tile_size=4
    )


@pytest.fixture
def params():
    return ConsistencyParams()


@pytest.fixture
def sched():
    return make_linear_schedule(1000, 1e-4, 0.02)


@pytest.fixture
def short_sched():
    return make_linear_schedule(20, 1e-4, 0.02)


class PosteriorMeanDenoiser(nn.Module):
    """
    Optimal noise predictor for per-pixel data x0 ~ N(mean, std²).

    Predicts the noise implied by E[x0 | x_t], which is affine in x_t.
    """

    def __init__(self, sched, mean=GAUSS_MEAN, std=GAUSS_STD):
        super().__init__()
        self.sched = sched
        self.mean = mean
        self.std = std
        self.config = SimpleNamespace(target_channels=1)

    def forward(self, x_t, t, cond):
        ab = broadcast_coef(self.sched.alpha_bar(t), x_t)
        var = ab * self.std ** 2 + 1.0 - ab
        x0_mean = self.mean + self.std ** 2 * torch.sqrt(ab) * (x_t - torch.sqrt(ab) * self.mean) / var
        return eps_from_x0(self.sched, x_t, x0_mean, t)


class FlowMapDenoiser(nn.Module):
    """
    Noise predictor whose consistency function is the exact probability-flow
    map of N(mean, std²) data: f(x_t, t) = mean + std (x_t − √ᾱ mean) / √(ᾱ std² + 1 − ᾱ).
    """

    def __init__(self, sched, params, mean=GAUSS_MEAN, std=GAUSS_STD):
        super().__init__()
        self.sched = sched
        self.params = params
        self.mean = mean
        self.std = std
        self.config = SimpleNamespace(target_channels=1)

    def forward(self, x_t, t, cond):
        ab = broadcast_coef(self.sched.alpha_bar(t), x_t)
        target = self.mean + self.std * (x_t - torch.sqrt(ab) * self.mean) / torch.sqrt(ab * self.std ** 2 + 1.0 - ab)
        skip = broadcast_coef(c_skip(self.params, self.sched, t), x_t)
        out = broadcast_coef(c_out(self.params, self.sched, t), x_t)
        x0_hat = (target - skip * x_t) / torch.clamp(out, min=1e-12)
        return eps_from_x0(self.sched, x_t, x0_hat, t)


@pytest.fixture
def gaussian_cond():
    """40 000 one-pixel conditions (the oracles ignore them)."""
    return torch.zeros(40_000, 1, 1, 1, dtype=torch.float64)


@pytest.fixture
def posterior_mean_model(sched):
    return PosteriorMeanDenoiser(sched)


@pytest.fixture
def flow_map_model(sched, params):
    return FlowMapDenoiser(sched, params)


@pytest.fixture
def toy_data(tmp_path):
    """Eight training and four test pairs of 16x16 tiles."""
    root = tmp_path / "toy"
    make_toy_splits(root, n_train=8, n_test=4, tile_size=16, seed=3)
    return root


@pytest.fixture
def run_config(toy_data, tmp_path):
    """A complete run configuration small enough for a few seconds of training."""
    def build(overrides: dict | None = None):
        base = {
            "schedule.T": 20,
            "denoiser.base_width": 8,
            "denoiser.depth": 2,
            "denoiser.tile_size": 16,
            "batch_size": 4,
            "seed": 0,
            "output_dir": str(tmp_path / "run"),
            "data.train_manifest": str(toy_data / "manifest_train.json"),
            "data.test_manifest": str(toy_data / "manifest_test.json"),
            "teacher.iterations": 4,
            "teacher.save_every": 2,
            "teacher.log_every": 1,
            "teacher.optimizer.warmup": 1,
            "teacher.optimizer.lr": 1e-3,
            "distill.iterations": 3,
            "distill.save_every": 2,
            "distill.log_every": 1,
            "distill.grid_every": 2,
            "distill.grid_evals": 2,
            "distill.gap_pairs": 2,
            "distill.student_optimizer.warmup": 1,
            "distill.disc_optimizer.warmup": 1,
            "evaluation.n_evals": [1, 2],
            "evaluation.batch_size": 4,
            "evaluation.grid_rows": 2,
        }
        base.update(overrides or {})
        return load_train_config(preset="toy", overrides=base)
    return build
