"""Build samplers from method strings such as ``ddim:100`` or ``consistency:8``."""
from __future__ import annotations

from ..diffusion.schedule import NoiseSchedule
from ..utils.config import ConsistencyParams
from ..utils.errors import ValidationError
from .ancestral import AncestralSampler
from .base import BaseSampler
from .consistency import ConsistencySampler, Renoise
from .ddim import DDIMSampler

METHODS = ("ancestral", "ddim", "consistency")


def parse_method(spec: str) -> tuple[str, int | None]:
    """``"ddim:100"`` → ("ddim", 100); ``"ancestral"`` → ("ancestral", None)."""
    name, _, count = spec.strip().partition(":")
    name = name.lower()
    if name not in METHODS:
        raise ValidationError(f"Unknown sampling method '{name}'. Choose from {METHODS}")
    if name == "ancestral":
        if count:
            raise ValidationError("ancestral sampling always uses all T steps; drop the ':N' suffix")
        return name, None
    if not count:
        raise ValidationError(f"method '{name}' needs a step count, e.g. '{name}:8'")
    try:
        n = int(count)
    except ValueError as e:
        raise ValidationError(f"step count in '{spec}' is not an integer") from e
    if n < 1:
        raise ValidationError(f"step count in '{spec}' must be >= 1")
    return name, n


def make_sampler(
    spec: str,
    sched: NoiseSchedule,
    params: ConsistencyParams,
    renoise: Renoise = "forward",
    eta: float = 0.0,
) -> BaseSampler:
    name, n = parse_method(spec)
    if name == "ancestral":
        return AncestralSampler(sched)
    if name == "ddim":
        return DDIMSampler(sched, n, eta=eta)
    return ConsistencySampler(sched, params, n, renoise=renoise)
