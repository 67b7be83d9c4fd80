"""
Conditional noise-prediction U-net.

The condition image is concatenated with the noisy target at the input
layer; the step index enters every residual block through an additive
embedding. Teacher and student share this network.
"""
from __future__ import annotations

import copy

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..data.tiles import concat_condition
from ..utils.config import DenoiserConfig
from ..utils.validation import check_finite, validate_denoiser_config, validate_spatial_match
from .layers import DecoderLevel, Encoder, MidBlock, TimeEmbedding, norm_groups


class Denoiser(nn.Module):
    """Encoder-decoder with skip connections predicting the added noise."""

    def __init__(self, config: DenoiserConfig):
        super().__init__()
        validate_denoiser_config(config)
        self.config = config
        base = config.base_width
        temb_dim = config.time_embed_dim

        self.time_embed = TimeEmbedding(base, temb_dim)
        self.in_conv = nn.Conv2d(config.target_channels + config.condition_channels, base, 3, padding=1)
        self.encoder = Encoder(base, config.depth, temb_dim)
        self.mid = MidBlock(self.encoder.out_channels, temb_dim)

        decoder = []
        in_ch = self.encoder.out_channels
        for width in reversed(self.encoder.widths):
            decoder.append(DecoderLevel(in_ch, width, width, temb_dim))
            in_ch = width
        self.decoder = nn.ModuleList(decoder)

        self.out_norm = nn.GroupNorm(norm_groups(base), base)
        self.out_conv = nn.Conv2d(base, config.target_channels, 3, padding=1)

    def forward(self, x_t: torch.Tensor, t: int | torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        t = _step_vector(t, x_t)
        temb = self.time_embed(t)
        h = self.in_conv(concat_condition(x_t, cond))
        h, skips = self.encoder(h, temb)
        h = self.mid(h, temb)
        for level, skip in zip(self.decoder, reversed(skips)):
            h = level(h, skip, temb)
        return self.out_conv(F.silu(self.out_norm(h)))

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def _step_vector(t: int | torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    """One step index per batch element, on ``like``'s device."""
    if not isinstance(t, torch.Tensor):
        t = torch.tensor(int(t))
    t = t.to(like.device)
    if t.dim() == 0:
        t = t.expand(like.shape[0])
    return t


def predict_noise(model: Denoiser, x_t: torch.Tensor, t: int | torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
    """
    Predicted noise ε̂ for a batch of noisy targets.

    Raises:
        ShapeMismatchError: x_t and cond are not spatially aligned.
        NumericalHealthError: the network produced NaN or Inf.
    """
    validate_spatial_match(x_t, cond, "x_t and cond")
    eps_hat = model(x_t, t, cond)
    return check_finite(eps_hat, "predict_noise")


def init_denoiser(config: DenoiserConfig, seed: int) -> Denoiser:
    """Build a denoiser whose initial weights depend only on ``seed``."""
    validate_denoiser_config(config)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return Denoiser(config)


def clone_weights(src: nn.Module) -> nn.Module:
    """Deep, independent copy (weights, buffers and train/eval mode)."""
    return copy.deepcopy(src)


def freeze(model: nn.Module) -> nn.Module:
    """Put ``model`` in eval mode and stop gradients to all its parameters."""
    model.eval()
    model.requires_grad_(False)
    return model
