"""Step plans for multi-step consistency sampling."""
from __future__ import annotations

from dataclasses import dataclass

from ..diffusion.schedule import NoiseSchedule
from ..utils.errors import InvalidRangeError, StepRangeError


@dataclass(frozen=True)
class SamplerPlan:
    """
    Re-noising steps t_1 > ... > t_{N-1} inside (t_min, T) and the seed.

    The first evaluation always happens at T; ``n_evals`` = len(steps) + 1.
    """
    steps: tuple[int, ...]
    seed: int = 0

    @property
    def n_evals(self) -> int:
        return len(self.steps) + 1

    def validate(self, sched: NoiseSchedule, t_min: int) -> "SamplerPlan":
        """
        Raises:
            StepRangeError: a step outside (t_min, T) or a non-decreasing pair.
        """
        for a, b in zip(self.steps, self.steps[1:]):
            if b >= a:
                raise StepRangeError(f"plan steps must strictly decrease, got {a} then {b}")
        for t in self.steps:
            if not t_min < t < sched.T:
                raise StepRangeError(f"plan step {t} outside ({t_min}, {sched.T})")
        return self


def spaced_steps(high: int, low: int, count: int) -> list[int]:
    """
    ``count`` integers from ``high`` down to ``low`` inclusive, as evenly
    spaced as integer rounding allows (offsets rounded half up).
    """
    if count == 1:
        return [high]
    span = high - low
    return [high - (2 * i * span + (count - 1)) // (2 * (count - 1)) for i in range(count)]


def uniform_plan(n_evals: int, sched: NoiseSchedule, seed: int = 0, t_min: int = 1) -> SamplerPlan:
    """
    Plan with ``n_evals - 1`` re-noising steps spread over [t_min + 1, T - 1].

    Re-noising steps must be distinct and lie strictly between t_min and T,
    so ``n_evals`` is at most T - t_min (T - 1 with the default t_min),
    one less than the T evaluations of ancestral sampling.

    Raises:
        InvalidRangeError: n_evals < 1 or n_evals > T - t_min.
    """
    if n_evals < 1:
        raise InvalidRangeError(f"n_evals must be >= 1, got {n_evals}")
    count = n_evals - 1
    low, high = t_min + 1, sched.T - 1
    available = max(high - low + 1, 0)
    if n_evals > sched.T or count > available:
        raise InvalidRangeError(
            f"n_evals={n_evals} exceeds T - t_min = {sched.T - t_min} (T={sched.T}): "
            f"needs {count} distinct steps in [{low}, {high}], only {available} available"
        )
    steps = tuple(spaced_steps(high, low, count)) if count else ()
    return SamplerPlan(steps=steps, seed=seed).validate(sched, t_min)
