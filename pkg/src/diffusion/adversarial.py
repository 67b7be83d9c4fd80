"""Hinge adversarial losses for the conditional discriminator."""
from __future__ import annotations

import torch
import torch.nn.functional as F

from ..models.discriminator import Discriminator, discriminate
from ..utils.errors import ShapeMismatchError


def hinge_d_loss(real_scores: torch.Tensor, fake_scores: torch.Tensor) -> torch.Tensor:
    """E[max(0, 1 - D(real))] + E[max(0, 1 + D(fake))]."""
    return F.relu(1.0 - real_scores).mean() + F.relu(1.0 + fake_scores).mean()


def hinge_g_loss(fake_scores: torch.Tensor) -> torch.Tensor:
    """-E[D(fake)]."""
    return -fake_scores.mean()


def d_loss(disc: Discriminator, real: torch.Tensor, fake: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
    """
    Discriminator hinge loss.

    ``fake`` is detached, so minimizing this loss never reaches the
    network that produced it.

    Raises:
        ShapeMismatchError: real and fake batches differ in shape.
    """
    if real.shape != fake.shape:
        raise ShapeMismatchError(f"real {tuple(real.shape)} and fake {tuple(fake.shape)} batches differ")
    real_scores = discriminate(disc, real, cond)
    fake_scores = discriminate(disc, fake.detach(), cond)
    return hinge_d_loss(real_scores, fake_scores)


def g_adv_loss(disc: Discriminator, fake: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
    """Generator-side hinge loss; gradients flow into ``fake``."""
    return hinge_g_loss(discriminate(disc, fake, cond))
