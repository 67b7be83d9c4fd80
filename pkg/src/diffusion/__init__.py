"""Diffusion process, consistency parameterization and distillation losses."""
from .schedule import (
    NoiseSchedule,
    forward_diffuse,
    make_linear_schedule,
    make_schedule,
    schedule_from_dict,
    schedule_to_dict,
    schedules_match,
    x0_from_eps,
)
from .adversarial import d_loss, g_adv_loss, hinge_d_loss, hinge_g_loss
from .consistency import (
    DistillLossReport,
    c_out,
    c_skip,
    combine_losses,
    consistency_fn,
    distill_step,
    self_consistency_gap,
)
from .ema import ema_update

__all__ = [
    "NoiseSchedule", "forward_diffuse", "make_linear_schedule", "make_schedule",
    "schedule_from_dict", "schedule_to_dict", "schedules_match", "x0_from_eps",
    "d_loss", "g_adv_loss", "hinge_d_loss", "hinge_g_loss",
    "DistillLossReport", "c_out", "c_skip", "combine_losses", "consistency_fn",
    "distill_step", "self_consistency_gap",
    "ema_update",
]
