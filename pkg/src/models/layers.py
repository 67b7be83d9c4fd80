"""Building blocks shared by the denoiser and the discriminator."""
from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F


def norm_groups(channels: int) -> int:
    """GroupNorm group count: 8 when it divides the width, else a single group."""
    return 8 if channels % 8 == 0 else 1


def sinusoidal_embedding(t: torch.Tensor, dim: int, max_period: float = 10000.0) -> torch.Tensor:
    """
    Sinusoidal features of the step index.

    Args:
        t: Step indices, shape (B,).
        dim: Output feature size.

    Returns:
        Tensor of shape (B, dim) in the default float dtype of ``t``'s caller.
    """
    half = dim // 2
    freqs = torch.exp(
        -math.log(max_period) * torch.arange(half, device=t.device, dtype=torch.float64) / max(half - 1, 1)
    )
    args = t.to(torch.float64)[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=-1)
    if dim % 2:
        emb = F.pad(emb, (0, 1))
    return emb


class TimeEmbedding(nn.Module):
    """Sinusoidal step features followed by a two-layer projection."""

    def __init__(self, sinusoid_dim: int, embed_dim: int):
        super().__init__()
        self.sinusoid_dim = sinusoid_dim
        self.mlp = nn.Sequential(
            nn.Linear(sinusoid_dim, embed_dim),
            nn.SiLU(),
            nn.Linear(embed_dim, embed_dim),
        )

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        emb = sinusoidal_embedding(t, self.sinusoid_dim).to(self.mlp[0].weight.dtype)
        return self.mlp(emb)


class ResBlock(nn.Module):
    """
    GroupNorm → SiLU → conv, twice, with additive step-embedding injection
    between the convolutions and a 1×1 projection on the residual path
    when the width changes. ``temb=None`` skips the injection.
    """

    def __init__(self, in_ch: int, out_ch: int, temb_dim: int):
        super().__init__()
        self.norm1 = nn.GroupNorm(norm_groups(in_ch), in_ch)
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=1)
        self.temb_proj = nn.Linear(temb_dim, out_ch)
        self.norm2 = nn.GroupNorm(norm_groups(out_ch), out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)
        self.skip = nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else nn.Identity()

    def forward(self, x: torch.Tensor, temb: torch.Tensor | None = None) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        if temb is not None:
            h = h + self.temb_proj(F.silu(temb))[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return h + self.skip(x)


class Downsample(nn.Module):
    def __init__(self, ch: int):
        super().__init__()
        self.conv = nn.Conv2d(ch, ch, 3, stride=2, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(x)


class Upsample(nn.Module):
    def __init__(self, ch: int):
        super().__init__()
        self.conv = nn.Conv2d(ch, ch, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(F.interpolate(x, scale_factor=2, mode="nearest"))


class EncoderLevel(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, temb_dim: int):
        super().__init__()
        self.blocks = nn.ModuleList([ResBlock(in_ch, out_ch, temb_dim), ResBlock(out_ch, out_ch, temb_dim)])
        self.down = Downsample(out_ch)


class Encoder(nn.Module):
    """
    Downsampling path: per level, two residual blocks at width
    ``base_width * 2**level`` then a stride-2 convolution.
    """

    def __init__(self, base_width: int, depth: int, temb_dim: int):
        super().__init__()
        self.widths = [base_width * 2 ** i for i in range(depth)]
        levels = []
        in_ch = base_width
        for width in self.widths:
            levels.append(EncoderLevel(in_ch, width, temb_dim))
            in_ch = width
        self.levels = nn.ModuleList(levels)

    @property
    def out_channels(self) -> int:
        return self.widths[-1]

    def forward(self, h: torch.Tensor, temb: torch.Tensor | None = None) -> tuple[torch.Tensor, list[torch.Tensor]]:
        skips = []
        for level in self.levels:
            for block in level.blocks:
                h = block(h, temb)
            skips.append(h)
            h = level.down(h)
        return h, skips


class MidBlock(nn.Module):
    """Bottleneck: two residual blocks at the deepest width."""

    def __init__(self, ch: int, temb_dim: int):
        super().__init__()
        self.blocks = nn.ModuleList([ResBlock(ch, ch, temb_dim), ResBlock(ch, ch, temb_dim)])

    def forward(self, h: torch.Tensor, temb: torch.Tensor | None = None) -> torch.Tensor:
        for block in self.blocks:
            h = block(h, temb)
        return h


class DecoderLevel(nn.Module):
    def __init__(self, in_ch: int, skip_ch: int, out_ch: int, temb_dim: int):
        super().__init__()
        self.up = Upsample(in_ch)
        self.blocks = nn.ModuleList([ResBlock(in_ch + skip_ch, out_ch, temb_dim), ResBlock(out_ch, out_ch, temb_dim)])

    def forward(self, h: torch.Tensor, skip: torch.Tensor, temb: torch.Tensor) -> torch.Tensor:
        h = torch.cat([self.up(h), skip], dim=1)
        for block in self.blocks:
            h = block(h, temb)
        return h
