"""
Conditional discriminator.

Reuses the denoiser's input convolution, downsampling path and bottleneck
(no upsampling path) and adds a global-average-pool + affine head giving
one unbounded realness score per sample. It takes no step input.
"""
from __future__ import annotations

import copy

import torch
import torch.nn as nn

from ..data.tiles import concat_condition
from ..utils.config import DenoiserConfig
from ..utils.validation import check_finite, validate_denoiser_config, validate_spatial_match
from .denoiser import Denoiser
from .layers import Encoder, MidBlock


class Discriminator(nn.Module):
    def __init__(self, config: DenoiserConfig):
        super().__init__()
        validate_denoiser_config(config)
        self.config = config
        temb_dim = config.time_embed_dim
        self.in_conv = nn.Conv2d(config.target_channels + config.condition_channels, config.base_width, 3, padding=1)
        self.encoder = Encoder(config.base_width, config.depth, temb_dim)
        self.mid = MidBlock(self.encoder.out_channels, temb_dim)
        self.head = nn.Linear(self.encoder.out_channels, 1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    @classmethod
    def from_denoiser(cls, denoiser: Denoiser) -> "Discriminator":
        """
        Discriminator whose encoder and bottleneck start from ``denoiser``'s weights.

        The head starts at zero, so every initial score is exactly 0.
        """
        disc = cls(denoiser.config)
        disc.in_conv.load_state_dict(copy.deepcopy(denoiser.in_conv.state_dict()))
        disc.encoder.load_state_dict(copy.deepcopy(denoiser.encoder.state_dict()))
        disc.mid.load_state_dict(copy.deepcopy(denoiser.mid.state_dict()))
        p = next(denoiser.parameters())
        return disc.to(device=p.device, dtype=p.dtype)

    def forward(self, img: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        h = self.in_conv(concat_condition(img, cond))
        h, _ = self.encoder(h)
        h = self.mid(h)
        return self.head(h.mean(dim=(-2, -1))).squeeze(-1)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def discriminate(disc: Discriminator, img: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
    """
    Per-sample realness scores, shape (B,).

    Raises:
        ShapeMismatchError: img and cond are not spatially aligned.
    """
    validate_spatial_match(img, cond, "img and cond")
    return check_finite(disc(img, cond), "discriminate")
