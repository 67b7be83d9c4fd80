"""Base sampler interface."""
from __future__ import annotations

from abc import ABC, abstractmethod
from contextlib import contextmanager
from dataclasses import dataclass

import torch
import torch.nn as nn

from ..utils.timer import Timer, device_synchronizer
from ..utils.validation import check_finite


@dataclass
class SampleResult:
    """Result returned by a sampler."""
    images: torch.Tensor
    n_evals: int
    time_seconds: float
    method: str = ""


class EvalCounter(nn.Module):
    """Wrap a denoiser and count forward evaluations (one per batched call)."""

    def __init__(self, model: nn.Module):
        super().__init__()
        self.model = model
        self.calls = 0

    @property
    def config(self):
        return self.model.config

    def forward(self, x_t: torch.Tensor, t, cond: torch.Tensor) -> torch.Tensor:
        self.calls += 1
        return self.model(x_t, t, cond)


def target_channels_of(model: nn.Module, cond: torch.Tensor) -> int:
    """Channel count of the images ``model`` generates."""
    config = getattr(model, "config", None)
    if config is not None and hasattr(config, "target_channels"):
        return int(config.target_channels)
    return int(cond.shape[-3])


def initial_noise(model: nn.Module, cond: torch.Tensor, generator: torch.Generator) -> torch.Tensor:
    """x_T ~ N(0, I) in the target shape implied by ``cond``."""
    shape = (*cond.shape[:-3], target_channels_of(model, cond), *cond.shape[-2:])
    return torch.randn(shape, generator=generator, device=cond.device, dtype=cond.dtype)


def seeded_generator(seed: int, device: torch.device | str) -> torch.Generator:
    gen = torch.Generator(device=device)
    gen.manual_seed(int(seed))
    return gen


@contextmanager
def eval_mode(model: nn.Module):
    """Run with ``model`` in eval mode and gradients off, then restore its mode."""
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            yield model
    finally:
        model.train(was_training)


def finish(x: torch.Tensor, stage: str) -> torch.Tensor:
    """Final health check and clip to [-1, 1]."""
    return check_finite(x, stage).clamp(-1.0, 1.0)


class BaseSampler(ABC):
    """Abstract base class for all samplers."""

    def __init__(self, name: str = "BaseSampler"):
        self.name = name
        self.reset_stats()

    @property
    @abstractmethod
    def expected_evals(self) -> int:
        """Denoiser evaluations per call to ``sample``."""

    @abstractmethod
    def _run(self, model: nn.Module, cond: torch.Tensor, seed: int, x_T: torch.Tensor | None) -> torch.Tensor:
        """Produce images in [-1, 1] for a batch of conditions."""

    def sample(
        self,
        model: nn.Module,
        cond: torch.Tensor,
        seed: int = 0,
        x_T: torch.Tensor | None = None,
    ) -> SampleResult:
        """
        Translate a batch of condition images.

        Args:
            model: Noise-prediction network.
            cond: Conditions, (B, Cc, H, W).
            seed: Seed of every random draw of this call.
            x_T: Optional starting noise (otherwise drawn from ``seed``).

        Returns:
            SampleResult with images (B, Ct, H, W) and the evaluation count.
        """
        counter = EvalCounter(model)
        with Timer(self.name, sync=device_synchronizer(cond.device)) as timer:
            with eval_mode(model):
                images = self._run(counter, cond, seed, x_T)
        self.stats["calls"] += 1
        self.stats["total_time"] += timer.elapsed
        self.stats["model_evals"] += counter.calls
        return SampleResult(images=images, n_evals=counter.calls, time_seconds=timer.elapsed, method=self.name)

    def reset_stats(self):
        """Reset sampler statistics."""
        self.stats = {
            "calls": 0,
            "total_time": 0.0,
            "model_evals": 0,
        }
