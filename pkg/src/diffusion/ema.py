"""Exponential moving average of model parameters."""
from __future__ import annotations

from typing import Iterable

import torch
import torch.nn as nn

from ..utils.errors import InvalidRangeError, ShapeMismatchError

Params = nn.Module | Iterable[torch.Tensor]


def _tensors(params: Params) -> list[torch.Tensor]:
    if isinstance(params, nn.Module):
        return list(params.parameters())
    return list(params)


@torch.no_grad()
def ema_update(target_params: Params, online_params: Params, decay: float) -> Params:
    """
    In place: target ← decay · target + (1 − decay) · online.

    Raises:
        InvalidRangeError: decay outside [0, 1).
        ShapeMismatchError: the two parameter lists are not congruent.
    """
    if not 0.0 <= decay < 1.0:
        raise InvalidRangeError(f"EMA decay must lie in [0, 1), got {decay}")
    targets, onlines = _tensors(target_params), _tensors(online_params)
    if len(targets) != len(onlines):
        raise ShapeMismatchError(f"parameter counts differ: {len(targets)} vs {len(onlines)}")
    for tgt, src in zip(targets, onlines):
        if tgt.shape != src.shape:
            raise ShapeMismatchError(f"parameter shapes differ: {tuple(tgt.shape)} vs {tuple(src.shape)}")
        tgt.mul_(decay).add_(src.detach(), alpha=1.0 - decay)
    return target_params
