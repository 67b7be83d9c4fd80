"""
Discrete variance-preserving diffusion schedule.

Step indices are integers 0..T. The tables below have length T and hold
step t at position t - 1; the accessors add the convention ᾱ_0 = 1 so that
t = 0 is the identity corruption:

    x_t  = sqrt(ᾱ_t) * x_0 + sqrt(1 - ᾱ_t) * ε
    x̂_0 = (x_t - sqrt(1 - ᾱ_t) * ε̂) / sqrt(ᾱ_t)

All tables are kept in float64; coefficients are cast to the dtype and
device of the tensor they are applied to.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import torch

from ..utils.config import ScheduleConfig
from ..utils.errors import InvalidRangeError, StepZeroError
from ..utils.validation import validate_same_shape, validate_step

Step = int | torch.Tensor


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Per-step constants β_t, α_t and ᾱ_t of the forward chain."""
    T: int
    betas: torch.Tensor
    alphas: torch.Tensor
    alpha_bars: torch.Tensor

    @cached_property
    def alpha_bar_table(self) -> torch.Tensor:
        """ᾱ indexed directly by step, length T + 1, with ᾱ_0 = 1."""
        return torch.cat([torch.ones(1, dtype=torch.float64), self.alpha_bars])

    def alpha_bar(self, t: Step) -> torch.Tensor:
        """ᾱ_t for t in [0, T] (float64)."""
        validate_step(t, 0, self.T)
        return self.alpha_bar_table[_as_index(t)]

    def beta(self, t: Step) -> torch.Tensor:
        """β_t for t in [1, T]."""
        validate_step(t, 1, self.T)
        return self.betas[_as_index(t) - 1]

    def alpha(self, t: Step) -> torch.Tensor:
        validate_step(t, 1, self.T)
        return self.alphas[_as_index(t) - 1]

    def sigma(self, t: Step) -> torch.Tensor:
        """Noise-to-signal level sqrt((1 - ᾱ_t) / ᾱ_t); zero at t = 0."""
        ab = self.alpha_bar(t)
        return torch.sqrt((1.0 - ab) / ab)

    def posterior_variance(self, t: Step) -> torch.Tensor:
        """β̃_t = β_t (1 - ᾱ_{t-1}) / (1 - ᾱ_t) for t in [1, T]."""
        validate_step(t, 1, self.T)
        idx = _as_index(t)
        table = self.alpha_bar_table
        return self.betas[idx - 1] * (1.0 - table[idx - 1]) / (1.0 - table[idx])


def _as_index(t: Step) -> torch.Tensor:
    if isinstance(t, torch.Tensor):
        return t.detach().to("cpu", torch.long)
    return torch.tensor(int(t), dtype=torch.long)


def broadcast_coef(values: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    """
    Reshape per-sample coefficients for broadcasting against ``like``.

    ``values`` is a scalar or has one entry per batch element (leading dim
    of ``like``); the result matches ``like``'s dtype and device.
    """
    values = values.to(device=like.device, dtype=like.dtype)
    if values.dim() == 0:
        return values
    return values.reshape(values.shape[0], *([1] * (like.dim() - 1)))


def make_linear_schedule(T: int, beta_min: float, beta_max: float) -> NoiseSchedule:
    """
    Build a schedule whose β_t interpolate linearly from beta_min to beta_max.

    Raises:
        InvalidRangeError: T < 2 or not 0 < beta_min <= beta_max < 1.
    """
    if int(T) != T or T < 2:
        raise InvalidRangeError(f"T must be an integer >= 2, got {T}")
    if not (0.0 < beta_min <= beta_max < 1.0):
        raise InvalidRangeError(
            f"beta range must satisfy 0 < beta_min <= beta_max < 1, got ({beta_min}, {beta_max})"
        )
    betas = torch.linspace(beta_min, beta_max, int(T), dtype=torch.float64)
    alphas = 1.0 - betas
    alpha_bars = torch.cumprod(alphas, dim=0)
    return NoiseSchedule(T=int(T), betas=betas, alphas=alphas, alpha_bars=alpha_bars)


def make_schedule(config: ScheduleConfig) -> NoiseSchedule:
    return make_linear_schedule(config.T, config.beta_min, config.beta_max)


def forward_diffuse(sched: NoiseSchedule, x0: torch.Tensor, t: Step, noise: torch.Tensor) -> torch.Tensor:
    """
    Corrupt ``x0`` to step ``t``.

    Args:
        sched: Noise schedule.
        x0: Clean images, (B, C, H, W) or any shape.
        t: A single step or one step per batch element, each in [0, T].
        noise: Unit Gaussian noise with ``x0``'s shape.

    Returns:
        x_t with ``x0``'s shape. t = 0 returns ``x0`` exactly.
    """
    validate_same_shape(x0, noise, "x0 and noise")
    ab = sched.alpha_bar(t)
    signal = broadcast_coef(torch.sqrt(ab), x0)
    spread = broadcast_coef(torch.sqrt(1.0 - ab), x0)
    x_t = signal * x0 + spread * noise
    # Rows at t = 0 pass through untouched
    if isinstance(t, torch.Tensor) and t.dim() > 0:
        keep = broadcast_coef((_as_index(t) == 0).to(torch.float64), x0).bool()
        return torch.where(keep, x0, x_t)
    if int(t) == 0:
        return x0.clone()
    return x_t


def x0_from_eps(sched: NoiseSchedule, x_t: torch.Tensor, eps_hat: torch.Tensor, t: Step) -> torch.Tensor:
    """
    Clean-image estimate from a noise prediction.

    Raises:
        StepZeroError: t = 0, where the noise parameterization is undefined.
    """
    validate_same_shape(x_t, eps_hat, "x_t and eps_hat")
    validate_step(t, 0, sched.T)
    if int(_as_index(t).min()) == 0:
        raise StepZeroError("x0_from_eps is undefined at t = 0")
    ab = sched.alpha_bar(t)
    return (x_t - broadcast_coef(torch.sqrt(1.0 - ab), x_t) * eps_hat) / broadcast_coef(torch.sqrt(ab), x_t)


def eps_from_x0(sched: NoiseSchedule, x_t: torch.Tensor, x0: torch.Tensor, t: Step) -> torch.Tensor:
    """Noise implied by a clean-image estimate; inverse of ``x0_from_eps``."""
    validate_step(t, 1, sched.T)
    ab = sched.alpha_bar(t)
    return (x_t - broadcast_coef(torch.sqrt(ab), x_t) * x0) / broadcast_coef(torch.sqrt(1.0 - ab), x_t)


def schedule_to_dict(sched: NoiseSchedule) -> dict:
    """Compact description stored in checkpoint headers."""
    return {
        "kind": "linear",
        "T": sched.T,
        "beta_min": float(sched.betas[0]),
        "beta_max": float(sched.betas[-1]),
    }


def schedule_from_dict(data: dict) -> NoiseSchedule:
    if data.get("kind", "linear") != "linear":
        raise InvalidRangeError(f"Unsupported schedule kind: {data.get('kind')}")
    return make_linear_schedule(int(data["T"]), float(data["beta_min"]), float(data["beta_max"]))


def schedules_match(a: NoiseSchedule, b: NoiseSchedule) -> bool:
    """True when both schedules have the same T and identical β tables."""
    return a.T == b.T and torch.equal(a.betas, b.betas)
