"""
Consistency-function parameterization and the distillation step.

    f(x_t, t) = c_skip(t) · x_t + c_out(t) · x̂_0(x_t, t)

where x̂_0 comes from the denoiser's noise prediction. At t = t_min the
coefficients are exactly (1, 0), so f(x, t_min) = x for any network.
"""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..data.dataset import TileBatch
from ..models.denoiser import predict_noise
from ..utils.config import ConsistencyParams
from ..utils.errors import FrozenTeacherError, InvalidRangeError, ValidationError
from ..utils.validation import check_finite, validate_step
from .adversarial import g_adv_loss
from .schedule import NoiseSchedule, Step, broadcast_coef, forward_diffuse, x0_from_eps


def _levels(params: ConsistencyParams, sched: NoiseSchedule, t: Step) -> tuple[torch.Tensor, torch.Tensor]:
    """Effective noise level per step and a mask of boundary steps."""
    validate_step(t, params.t_min, sched.T, "consistency step")
    sigma = sched.sigma(t)
    if params.skip_form == "shifted":
        sigma = sigma - sched.sigma(params.t_min)
    t_idx = t.detach().cpu() if isinstance(t, torch.Tensor) else torch.tensor(int(t))
    return sigma, t_idx == params.t_min


def c_skip(params: ConsistencyParams, sched: NoiseSchedule, t: Step) -> torch.Tensor:
    """σ_d² / (σ² + σ_d²), equal to 1 at t_min."""
    sigma, at_min = _levels(params, sched, t)
    sd2 = params.sigma_data ** 2
    value = sd2 / (sigma ** 2 + sd2)
    return torch.where(at_min, torch.ones_like(value), value)


def c_out(params: ConsistencyParams, sched: NoiseSchedule, t: Step) -> torch.Tensor:
    """σ_d · σ / sqrt(σ² + σ_d²), equal to 0 at t_min."""
    sigma, at_min = _levels(params, sched, t)
    sd = params.sigma_data
    value = sd * sigma / torch.sqrt(sigma ** 2 + sd ** 2)
    return torch.where(at_min, torch.zeros_like(value), value)


def consistency_fn(
    model: nn.Module,
    params: ConsistencyParams,
    sched: NoiseSchedule,
    x_t: torch.Tensor,
    t: Step,
    cond: torch.Tensor,
) -> torch.Tensor:
    """
    Clean-image estimate f(x_t, t).

    The network is evaluated even at t_min so that every call costs one
    evaluation; boundary rows are then replaced by x_t exactly.
    """
    validate_step(t, params.t_min, sched.T, "consistency step")
    eps_hat = predict_noise(model, x_t, t, cond)
    x0_hat = x0_from_eps(sched, x_t, eps_hat, t)
    skip = c_skip(params, sched, t)
    out = c_out(params, sched, t)
    f = broadcast_coef(skip, x_t) * x_t + broadcast_coef(out, x_t) * x0_hat
    at_min = (t.detach().cpu() if isinstance(t, torch.Tensor) else torch.tensor(int(t))) == params.t_min
    return torch.where(broadcast_coef(at_min.to(torch.float64), x_t).bool(), x_t, f)


@dataclass
class DistillLossReport:
    """Losses of one distillation step plus the two clean-image estimates."""
    l_consistency: torch.Tensor
    l_adv_g: torch.Tensor
    l_total: torch.Tensor
    t_sampled: int
    t_prime: int
    pred_teacher: torch.Tensor
    pred_student: torch.Tensor

    def scalars(self) -> dict[str, float]:
        return {
            "l_consistency": float(self.l_consistency),
            "l_adv_g": float(self.l_adv_g),
            "l_total": float(self.l_total),
            "t": self.t_sampled,
        }


def combine_losses(l_consistency: torch.Tensor, l_adv_g: torch.Tensor, lambda_adv: float) -> torch.Tensor:
    """L_total = L_consistency + λ_adv · L_adv_G."""
    return l_consistency + lambda_adv * l_adv_g


def check_frozen_teacher(teacher: nn.Module) -> None:
    """
    Raises:
        FrozenTeacherError: teacher in train mode or with trainable parameters.
    """
    if teacher.training:
        raise FrozenTeacherError("teacher must be in eval mode during distillation")
    trainable = [name for name, p in teacher.named_parameters() if p.requires_grad]
    if trainable:
        raise FrozenTeacherError(f"teacher has {len(trainable)} trainable parameters (first: {trainable[0]})")


@contextmanager
def gradients_disabled(module: nn.Module | None):
    """Temporarily mark every parameter of ``module`` as not requiring grad."""
    if module is None:
        yield
        return
    saved = [p.requires_grad for p in module.parameters()]
    module.requires_grad_(False)
    try:
        yield
    finally:
        for p, flag in zip(module.parameters(), saved):
            p.requires_grad_(flag)


def distill_step(
    student: nn.Module,
    teacher: nn.Module,
    disc: nn.Module | None,
    batch: TileBatch,
    sched: NoiseSchedule,
    params: ConsistencyParams,
    lambda_adv: float,
    generator: torch.Generator,
    skip: int = 1,
) -> DistillLossReport:
    """
    One teacher-denoise → re-noise → student-denoise pass.

    A single t is drawn uniformly from [t_min + 1, T] for the batch. The
    teacher target is computed without gradient; the student sees the
    target re-noised to t' = t - skip. ``skip = 0`` feeds the student the
    teacher's own input (x_t, t). The discriminator's parameters receive
    no gradient from the returned losses. Nothing is updated here.

    Raises:
        FrozenTeacherError: the teacher is trainable or in train mode.
        NumericalHealthError: a loss is NaN or Inf.
    """
    check_frozen_teacher(teacher)
    if lambda_adv < 0:
        raise InvalidRangeError(f"lambda_adv must be >= 0, got {lambda_adv}")
    if skip < 0:
        raise InvalidRangeError(f"skip must be >= 0, got {skip}")
    if len(batch) == 0:
        raise ValidationError("distill_step needs a non-empty batch")

    x0, cond = batch.target, batch.cond
    device = generator.device
    t = int(torch.randint(params.t_min + 1, sched.T + 1, (1,), generator=generator, device=device))
    z1 = torch.randn(x0.shape, generator=generator, device=device, dtype=x0.dtype)
    z2 = torch.randn(x0.shape, generator=generator, device=device, dtype=x0.dtype)

    x_t = forward_diffuse(sched, x0, t, z1)
    with torch.no_grad():
        pred_teacher = consistency_fn(teacher, params, sched, x_t, t, cond)

    if skip == 0:
        x_prime, t_prime = x_t, t
    else:
        t_prime = max(t - skip, 0)
        x_prime = pred_teacher if t_prime == 0 else forward_diffuse(sched, pred_teacher, t_prime, z2)
    pred_student = consistency_fn(student, params, sched, x_prime, max(t_prime, params.t_min), cond)

    l_consistency = F.mse_loss(pred_student, pred_teacher)
    if disc is not None:
        with gradients_disabled(disc):
            l_adv_g = g_adv_loss(disc, pred_student, cond)
    else:
        l_adv_g = torch.zeros((), dtype=l_consistency.dtype, device=l_consistency.device)
    l_total = combine_losses(l_consistency, l_adv_g, lambda_adv)
    check_finite(l_total.detach(), "distill_step", t=t, t_prime=t_prime,
                 l_consistency=float(l_consistency), l_adv_g=float(l_adv_g))

    return DistillLossReport(
        l_consistency=l_consistency,
        l_adv_g=l_adv_g,
        l_total=l_total,
        t_sampled=t,
        t_prime=t_prime,
        pred_teacher=pred_teacher,
        pred_student=pred_student,
    )


@torch.no_grad()
def self_consistency_gap(
    model: nn.Module,
    params: ConsistencyParams,
    sched: NoiseSchedule,
    batch: TileBatch,
    generator: torch.Generator,
    n_pairs: int = 8,
) -> float:
    """
    Mean squared disagreement E|f(x_t, t) − f(x_{t−1}, t−1)|² over adjacent
    steps, both points built from the same clean image and noise draw.
    """
    was_training = model.training
    model.eval()
    x0, cond = batch.target, batch.cond
    device = generator.device
    total = 0.0
    try:
        for _ in range(n_pairs):
            t = int(torch.randint(params.t_min + 1, sched.T + 1, (1,), generator=generator, device=device))
            z = torch.randn(x0.shape, generator=generator, device=device, dtype=x0.dtype)
            f_t = consistency_fn(model, params, sched, forward_diffuse(sched, x0, t, z), t, cond)
            f_prev = consistency_fn(model, params, sched, forward_diffuse(sched, x0, t - 1, z), t - 1, cond)
            total += float(F.mse_loss(f_t, f_prev))
    finally:
        model.train(was_training)
    return total / n_pairs
