"""Full T-step ancestral (DDPM) sampling."""
from __future__ import annotations

import torch
import torch.nn as nn

from ..diffusion.schedule import NoiseSchedule, x0_from_eps
from ..models.denoiser import predict_noise
from ..utils.validation import check_finite
from .base import BaseSampler, finish, initial_noise, seeded_generator


def posterior_coefficients(sched: NoiseSchedule, t: int) -> tuple[float, float, float]:
    """
    Mean coefficients on (x̂_0, x_t) and the variance β̃_t of q(x_{t−1} | x_t, x_0).
    """
    ab = float(sched.alpha_bar(t))
    ab_prev = float(sched.alpha_bar(t - 1))
    beta = float(sched.beta(t))
    coef_x0 = ab_prev ** 0.5 * beta / (1.0 - ab)
    coef_xt = float(sched.alpha(t)) ** 0.5 * (1.0 - ab_prev) / (1.0 - ab)
    return coef_x0, coef_xt, float(sched.posterior_variance(t))


def ancestral_sample(
    model: nn.Module,
    sched: NoiseSchedule,
    cond: torch.Tensor,
    seed: int,
    clip_denoised: bool = True,
    x_T: torch.Tensor | None = None,
) -> torch.Tensor:
    """
    Reverse the whole chain, one evaluation per step (T in total).

    No noise is added on the last step (t = 1).
    """
    gen = seeded_generator(seed, cond.device)
    x = initial_noise(model, cond, gen) if x_T is None else x_T
    for t in range(sched.T, 0, -1):
        eps_hat = predict_noise(model, x, t, cond)
        x0_hat = x0_from_eps(sched, x, eps_hat, t)
        if clip_denoised:
            x0_hat = x0_hat.clamp(-1.0, 1.0)
        coef_x0, coef_xt, var = posterior_coefficients(sched, t)
        x = coef_x0 * x0_hat + coef_xt * x
        if t > 1:
            z = torch.randn(x.shape, generator=gen, device=x.device, dtype=x.dtype)
            x = x + var ** 0.5 * z
        check_finite(x, "ancestral_sample", step=t)
    return finish(x, "ancestral_sample")


class AncestralSampler(BaseSampler):
    """The stochastic T-step baseline (``ancestral``)."""

    def __init__(self, sched: NoiseSchedule, clip_denoised: bool = True):
        super().__init__(name="ancestral")
        self.sched = sched
        self.clip_denoised = clip_denoised

    @property
    def expected_evals(self) -> int:
        return self.sched.T

    def _run(self, model, cond, seed, x_T):
        return ancestral_sample(model, self.sched, cond, seed, self.clip_denoised, x_T)
