"""Synchronized dihedral augmentation of paired tiles."""
from __future__ import annotations

import dataclasses

import torch

from ..utils.errors import ValidationError
from .tiles import PairedTile

N_DIHEDRAL = 8


def dihedral(x: torch.Tensor, k: int) -> torch.Tensor:
    """
    Apply dihedral element ``k`` (0..7) to the last two axes:
    ``k % 4`` counter-clockwise quarter turns, then a horizontal flip when k >= 4.
    """
    if not 0 <= k < N_DIHEDRAL:
        raise ValidationError(f"dihedral index must be in [0, 8), got {k}")
    if k % 2 == 1 and x.shape[-1] != x.shape[-2]:
        raise ValidationError(f"quarter-turn rotation needs a square tile, got {tuple(x.shape[-2:])}")
    out = torch.rot90(x, k % 4, dims=(-2, -1))
    if k >= 4:
        out = torch.flip(out, dims=(-1,))
    return out


def inverse_dihedral(x: torch.Tensor, k: int) -> torch.Tensor:
    """Undo ``dihedral(x, k)``."""
    if k >= 4:
        x = torch.flip(x, dims=(-1,))
    return torch.rot90(x, -(k % 4), dims=(-2, -1))


def apply_dihedral(pair: PairedTile, k: int) -> PairedTile:
    """Apply the same dihedral element to condition and target."""
    return dataclasses.replace(
        pair,
        cond=dihedral(pair.cond, k),
        target=dihedral(pair.target, k),
        meta={**pair.meta, "dihedral": k},
    )


def draw_dihedral(rng: torch.Generator) -> int:
    return int(torch.randint(0, N_DIHEDRAL, (1,), generator=rng))


def augment(pair: PairedTile, rng: torch.Generator) -> PairedTile:
    """Random rotation by a multiple of 90° plus optional flip, uniform over the 8 configurations."""
    return apply_dihedral(pair, draw_dihedral(rng))
