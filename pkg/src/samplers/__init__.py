"""Samplers: multi-step consistency, ancestral DDPM and DDIM."""
from .base import BaseSampler, EvalCounter, SampleResult
from .plans import SamplerPlan, uniform_plan
from .consistency import ConsistencySampler, consistency_sample
from .ancestral import AncestralSampler, ancestral_sample
from .ddim import DDIMSampler, ddim_sample
from .factory import make_sampler, parse_method

__all__ = [
    "BaseSampler", "EvalCounter", "SampleResult",
    "SamplerPlan", "uniform_plan",
    "ConsistencySampler", "consistency_sample",
    "AncestralSampler", "ancestral_sample",
    "DDIMSampler", "ddim_sample",
    "make_sampler", "parse_method",
]
