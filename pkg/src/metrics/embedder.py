"""
Feature embedders for the FID-proxy.

The default is a small, randomly initialized convolutional network with a
fixed seed. Scores computed with it are only comparable with each other,
never with Inception-based FID.
"""
from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np
import torch
import torch.nn as nn


@runtime_checkable
class FeatureEmbedder(Protocol):
    id: str
    dim: int

    def embed(self, images: torch.Tensor) -> np.ndarray:
        """(N, C, H, W) images in [-1, 1] → (N, dim) float64 features."""
        ...


class RandomConvEmbedder:
    """Frozen random conv net: three stride-2 convolutions, then global average pooling."""

    def __init__(self, seed: int = 0, n_features: int = 32, in_channels: int = 3, batch_size: int = 64):
        self.seed = seed
        self.dim = n_features
        self.in_channels = in_channels
        self.batch_size = batch_size
        self.id = f"randconv-f{n_features}-s{seed}"
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            hidden = max(n_features // 2, 1)
            self.net = nn.Sequential(
                nn.Conv2d(in_channels, hidden, 3, stride=2, padding=1),
                nn.SiLU(),
                nn.Conv2d(hidden, hidden, 3, stride=2, padding=1),
                nn.SiLU(),
                nn.Conv2d(hidden, n_features, 3, stride=2, padding=1),
                nn.AdaptiveAvgPool2d(1),
                nn.Flatten(),
            ).to(torch.float64)
        self.net.eval().requires_grad_(False)

    @torch.no_grad()
    def embed(self, images: torch.Tensor) -> np.ndarray:
        images = images.detach().to("cpu", torch.float64)
        chunks = [self.net(images[i:i + self.batch_size]) for i in range(0, images.shape[0], self.batch_size)]
        return torch.cat(chunks).numpy()
