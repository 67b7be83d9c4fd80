"""AdamW with linear warmup, and a clipped update step."""
from __future__ import annotations

from typing import Iterable

import torch
from torch.optim.lr_scheduler import LambdaLR

from ..utils.config import OptimizerConfig


def warmup_factor(warmup: int):
    """Learning-rate multiplier rising linearly to 1 over ``warmup`` updates, then flat."""
    def factor(step: int) -> float:
        if warmup <= 0:
            return 1.0
        return min(1.0, (step + 1) / warmup)
    return factor


def build_optimizer(
    params: Iterable[torch.nn.Parameter],
    config: OptimizerConfig,
) -> tuple[torch.optim.AdamW, LambdaLR]:
    optimizer = torch.optim.AdamW(
        params,
        lr=config.lr,
        betas=tuple(config.betas),
        weight_decay=config.weight_decay,
    )
    return optimizer, LambdaLR(optimizer, warmup_factor(config.warmup))


def apply_update(
    optimizer: torch.optim.Optimizer,
    scheduler: LambdaLR,
    params: Iterable[torch.nn.Parameter],
    grad_clip: float | None,
) -> float:
    """
    Clip (if configured), step the optimizer and the warmup schedule.

    Returns:
        Global gradient norm before clipping (0.0 without clipping).
    """
    grad_norm = 0.0
    if grad_clip is not None:
        grad_norm = float(torch.nn.utils.clip_grad_norm_(list(params), grad_clip))
    optimizer.step()
    scheduler.step()
    return grad_norm
