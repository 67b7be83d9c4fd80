"""DDIM sampling over an evenly spaced subset of steps."""
from __future__ import annotations

import torch
import torch.nn as nn

from ..diffusion.schedule import NoiseSchedule, x0_from_eps
from ..models.denoiser import predict_noise
from ..utils.errors import InvalidRangeError
from ..utils.validation import check_finite
from .base import BaseSampler, finish, initial_noise, seeded_generator
from .plans import spaced_steps


def ddim_timesteps(sched: NoiseSchedule, n_steps: int) -> list[int]:
    """``n_steps`` decreasing steps from T down to 1."""
    if not 1 <= n_steps <= sched.T:
        raise InvalidRangeError(f"n_steps must lie in [1, {sched.T}], got {n_steps}")
    return spaced_steps(sched.T, 1, n_steps)


def ddim_sample(
    model: nn.Module,
    sched: NoiseSchedule,
    cond: torch.Tensor,
    n_steps: int,
    eta: float = 0.0,
    seed: int = 0,
    clip_denoised: bool = True,
    x_T: torch.Tensor | None = None,
) -> torch.Tensor:
    """
    Generalized DDIM update; ``eta = 0`` is deterministic after x_T.

    Raises:
        InvalidRangeError: n_steps outside [1, T] or eta < 0.
    """
    if eta < 0:
        raise InvalidRangeError(f"eta must be >= 0, got {eta}")
    steps = ddim_timesteps(sched, n_steps)
    gen = seeded_generator(seed, cond.device)
    x = initial_noise(model, cond, gen) if x_T is None else x_T
    for i, t in enumerate(steps):
        t_next = steps[i + 1] if i + 1 < len(steps) else 0
        eps_hat = predict_noise(model, x, t, cond)
        x0_hat = x0_from_eps(sched, x, eps_hat, t)
        if clip_denoised:
            x0_hat = x0_hat.clamp(-1.0, 1.0)
        ab = float(sched.alpha_bar(t))
        ab_next = float(sched.alpha_bar(t_next))
        sigma = eta * ((1.0 - ab_next) / (1.0 - ab) * (1.0 - ab / ab_next)) ** 0.5
        # Noise direction consistent with the (possibly clipped) x̂_0
        eps_dir = (x - ab ** 0.5 * x0_hat) / (1.0 - ab) ** 0.5
        x = ab_next ** 0.5 * x0_hat + max(1.0 - ab_next - sigma ** 2, 0.0) ** 0.5 * eps_dir
        if sigma > 0 and t_next > 0:
            z = torch.randn(x.shape, generator=gen, device=x.device, dtype=x.dtype)
            x = x + sigma * z
        check_finite(x, "ddim_sample", step=t)
    return finish(x, "ddim_sample")


class DDIMSampler(BaseSampler):
    """Deterministic fast baseline (``ddim:N``)."""

    def __init__(self, sched: NoiseSchedule, n_steps: int, eta: float = 0.0, clip_denoised: bool = True):
        super().__init__(name=f"ddim:{n_steps}")
        ddim_timesteps(sched, n_steps)
        self.sched = sched
        self.n_steps = n_steps
        self.eta = eta
        self.clip_denoised = clip_denoised

    @property
    def expected_evals(self) -> int:
        return self.n_steps

    def _run(self, model, cond, seed, x_T):
        return ddim_sample(model, self.sched, cond, self.n_steps, self.eta, seed, self.clip_denoised, x_T)
