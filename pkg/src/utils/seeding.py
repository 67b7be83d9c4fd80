"""Deterministic random streams derived from integer keys."""
from __future__ import annotations

import numpy as np
import torch


def derive_seed(*keys: int) -> int:
    """Mix integer keys (seed, iteration, stream, ...) into one 63-bit seed."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def make_generator(*keys: int, device: str | torch.device = "cpu") -> torch.Generator:
    """A torch generator on ``device`` seeded from ``keys``."""
    gen = torch.Generator(device=device)
    gen.manual_seed(derive_seed(*keys))
    return gen
