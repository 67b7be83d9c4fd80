"""
Multi-step consistency sampling.

    x ← f(x_T, T)
    for t_n in plan.steps:
        x̂ ← re-noise(x, t_n)
        x ← f(x̂, t_n)

Two re-noising rules are available. ``"forward"`` puts x back on the
training marginal of step t_n: x̂ = sqrt(ᾱ_{t_n}) x + sqrt(1 − ᾱ_{t_n}) z.
``"literal"`` adds noise without rescaling:
x̂ = x + sqrt(t_n / t_{n−1} − ε²) z with ε = t_min / T and t_0 = T.
"""
from __future__ import annotations

import math
from typing import Literal

import torch
import torch.nn as nn

from ..diffusion.consistency import consistency_fn
from ..diffusion.schedule import NoiseSchedule, forward_diffuse
from ..utils.config import ConsistencyParams
from ..utils.errors import InvalidRangeError
from ..utils.validation import check_finite
from .base import BaseSampler, finish, initial_noise, seeded_generator
from .plans import SamplerPlan, uniform_plan

Renoise = Literal["forward", "literal"]


def literal_noise_scale(t_n: int, t_prev: int, t_min: int, T: int) -> float:
    """sqrt(t_n / t_prev − (t_min / T)²), with a negative radicand clamped to 0."""
    eps = t_min / T
    return math.sqrt(max(t_n / t_prev - eps ** 2, 0.0))


def consistency_sample(
    model: nn.Module,
    params: ConsistencyParams,
    sched: NoiseSchedule,
    cond: torch.Tensor,
    plan: SamplerPlan,
    renoise: Renoise = "forward",
    x_T: torch.Tensor | None = None,
) -> torch.Tensor:
    """
    Translate ``cond`` with exactly ``plan.n_evals`` denoiser evaluations.

    All draws come from a generator seeded with ``plan.seed`` on
    ``cond``'s device. Output is clipped to [-1, 1].

    Raises:
        NumericalHealthError: an intermediate holds NaN or Inf.
    """
    if renoise not in ("forward", "literal"):
        raise InvalidRangeError(f"unknown re-noising rule '{renoise}'")
    plan.validate(sched, params.t_min)
    gen = seeded_generator(plan.seed, cond.device)
    if x_T is None:
        x_T = initial_noise(model, cond, gen)

    x = consistency_fn(model, params, sched, x_T, sched.T, cond)
    check_finite(x, "consistency_sample", step=sched.T)
    t_prev = sched.T
    for t_n in plan.steps:
        z = torch.randn(x.shape, generator=gen, device=x.device, dtype=x.dtype)
        if renoise == "forward":
            x_hat = forward_diffuse(sched, x, t_n, z)
        else:
            x_hat = x + literal_noise_scale(t_n, t_prev, params.t_min, sched.T) * z
        x = consistency_fn(model, params, sched, x_hat, t_n, cond)
        check_finite(x, "consistency_sample", step=t_n)
        t_prev = t_n
    return finish(x, "consistency_sample")


class ConsistencySampler(BaseSampler):
    """Few-step sampler for a distilled student (``consistency:N``)."""

    def __init__(
        self,
        sched: NoiseSchedule,
        params: ConsistencyParams,
        n_evals: int,
        renoise: Renoise = "forward",
    ):
        super().__init__(name=f"consistency:{n_evals}")
        self.sched = sched
        self.params = params
        self.renoise = renoise
        self.plan = uniform_plan(n_evals, sched, seed=0, t_min=params.t_min)

    @property
    def expected_evals(self) -> int:
        return self.plan.n_evals

    def _run(self, model, cond, seed, x_T):
        plan = SamplerPlan(steps=self.plan.steps, seed=seed)
        return consistency_sample(model, self.params, self.sched, cond, plan, self.renoise, x_T)
