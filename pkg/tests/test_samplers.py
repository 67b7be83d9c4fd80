"""Tests for the samplers, their step plans and the method factory."""
import pytest
import torch

from src.diffusion.consistency import consistency_fn
from src.samplers import (
    AncestralSampler,
    ConsistencySampler,
    DDIMSampler,
    SamplerPlan,
    consistency_sample,
    make_sampler,
    parse_method,
    uniform_plan,
)
from src.samplers.base import EvalCounter
from src.samplers.consistency import literal_noise_scale
from src.samplers.ddim import ddim_timesteps
from src.samplers.plans import spaced_steps
from src.diffusion.schedule import make_linear_schedule
from src.models.denoiser import init_denoiser
from src.utils.errors import InvalidRangeError, StepRangeError, ValidationError

from .conftest import GAUSS_MEAN, GAUSS_STD


@pytest.fixture
def model(small_config):
    return init_denoiser(small_config, seed=0)


@pytest.fixture
def cond(small_config):
    gen = torch.Generator().manual_seed(0)
    return torch.rand(2, 1, small_config.tile_size, small_config.tile_size, generator=gen) * 2 - 1


class TestPlans:
    """Test step plans."""

    def test_pinned_eight_step_plan(self):
        """Eight evaluations on T = 200 re-noise at these seven steps."""
        plan = uniform_plan(8, make_linear_schedule(200, 1e-4, 0.02))

        assert plan.steps == (199, 166, 133, 100, 68, 35, 2)
        assert plan.n_evals == 8

    def test_single_evaluation_plan_is_empty(self, short_sched):
        assert uniform_plan(1, short_sched).steps == ()

    def test_plans_strictly_descend_inside_range(self, sched):
        for n in (2, 4, 8, 16, 64):
            steps = uniform_plan(n, sched).steps
            assert len(steps) == n - 1
            assert all(a > b for a, b in zip(steps, steps[1:]))
            assert all(1 < t < sched.T for t in steps)

    def test_too_many_evaluations(self, short_sched):
        """T = 20 leaves 18 distinct re-noising steps, so 20 evaluations do not fit."""
        with pytest.raises(InvalidRangeError):
            uniform_plan(20, short_sched)
        with pytest.raises(InvalidRangeError):
            uniform_plan(0, short_sched)

    def test_upper_bound_is_t_minus_t_min(self, short_sched):
        """19 evaluations fit in T = 20; asking for T explains the bound in the error."""
        assert len(uniform_plan(19, short_sched).steps) == 18
        with pytest.raises(InvalidRangeError, match=r"T - t_min = 19 \(T=20\)"):
            uniform_plan(20, short_sched)

    def test_invalid_hand_plans(self, short_sched):
        with pytest.raises(StepRangeError):
            SamplerPlan(steps=(5, 5)).validate(short_sched, 1)
        with pytest.raises(StepRangeError):
            SamplerPlan(steps=(20,)).validate(short_sched, 1)
        with pytest.raises(StepRangeError):
            SamplerPlan(steps=(1,)).validate(short_sched, 1)

    def test_spaced_steps_endpoints(self):
        assert spaced_steps(100, 1, 2) == [100, 1]
        assert spaced_steps(100, 1, 1) == [100]
        assert spaced_steps(10, 1, 10) == list(range(10, 0, -1))

    def test_ddim_timesteps(self, short_sched):
        assert ddim_timesteps(short_sched, 20) == list(range(20, 0, -1))
        assert ddim_timesteps(short_sched, 1) == [20]
        with pytest.raises(InvalidRangeError):
            ddim_timesteps(short_sched, 21)

    def test_literal_noise_scale(self):
        assert literal_noise_scale(50, 100, 1, 100) == pytest.approx((0.5 - 1e-4) ** 0.5)
        assert literal_noise_scale(1, 100, 20, 100) == 0.0


class TestConsistencySampler:
    """Test multi-step consistency sampling."""

    def test_single_evaluation_is_one_consistency_call(self, model, cond, short_sched, params):
        x_T = torch.randn(2, 3, 16, 16, generator=torch.Generator().manual_seed(1))
        result = ConsistencySampler(short_sched, params, 1).sample(model, cond, seed=0, x_T=x_T)

        with torch.no_grad():
            expected = consistency_fn(model, params, short_sched, x_T, short_sched.T, cond).clamp(-1, 1)

        assert result.n_evals == 1
        assert torch.equal(result.images, expected)

    @pytest.mark.parametrize("n", [1, 2, 4, 8])
    def test_evaluation_count(self, model, cond, short_sched, params, n):
        result = ConsistencySampler(short_sched, params, n).sample(model, cond, seed=0)

        assert result.n_evals == n
        assert result.method == f"consistency:{n}"

    def test_same_seed_same_output(self, model, cond, short_sched, params):
        sampler = ConsistencySampler(short_sched, params, 4)

        a = sampler.sample(model, cond, seed=3).images
        b = sampler.sample(model, cond, seed=3).images
        c = sampler.sample(model, cond, seed=4).images

        assert torch.equal(a, b)
        assert not torch.equal(a, c)

    def test_output_shape_and_range(self, model, cond, short_sched, params):
        images = ConsistencySampler(short_sched, params, 2).sample(model, cond, seed=0).images

        assert images.shape == (2, 3, 16, 16)
        assert images.min() >= -1.0 and images.max() <= 1.0

    def test_literal_renoise_runs(self, model, cond, short_sched, params):
        result = ConsistencySampler(short_sched, params, 4, renoise="literal").sample(model, cond, seed=0)

        assert result.n_evals == 4

    def test_unknown_renoise_rule(self, model, cond, short_sched, params):
        with pytest.raises(InvalidRangeError):
            consistency_sample(model, params, short_sched, cond, uniform_plan(2, short_sched), renoise="other")

    def test_restores_training_mode(self, model, cond, short_sched, params):
        model.train()
        ConsistencySampler(short_sched, params, 2).sample(model, cond, seed=0)

        assert model.training

    def test_gaussian_oracle(self, flow_map_model, gaussian_cond, sched, params):
        """With the exact flow map of N(0.3, 0.2²), 16 evaluations recover its moments."""
        images = ConsistencySampler(sched, params, 16).sample(flow_map_model, gaussian_cond, seed=0).images

        assert abs(float(images.mean()) - GAUSS_MEAN) < 0.02
        assert float(images.std()) == pytest.approx(GAUSS_STD, rel=0.10)


class TestAncestralSampler:
    """Test full-chain ancestral sampling."""

    def test_evaluates_every_step(self, model, cond, short_sched):
        result = AncestralSampler(short_sched).sample(model, cond, seed=0)

        assert result.n_evals == short_sched.T
        assert result.method == "ancestral"

    def test_deterministic_given_seed(self, model, cond, short_sched):
        sampler = AncestralSampler(short_sched)

        assert torch.equal(sampler.sample(model, cond, seed=1).images, sampler.sample(model, cond, seed=1).images)

    def test_gaussian_oracle(self, posterior_mean_model, gaussian_cond, sched):
        """With the optimal denoiser of N(0.3, 0.2²), T steps recover its moments."""
        images = AncestralSampler(sched).sample(posterior_mean_model, gaussian_cond, seed=0).images

        assert abs(float(images.mean()) - GAUSS_MEAN) < 0.02 * GAUSS_STD
        assert float(images.var()) == pytest.approx(GAUSS_STD ** 2, rel=0.10)


class TestDDIMSampler:
    """Test DDIM sampling."""

    def test_evaluation_count(self, model, cond, short_sched):
        result = DDIMSampler(short_sched, 5).sample(model, cond, seed=0)

        assert result.n_evals == 5
        assert result.method == "ddim:5"

    def test_deterministic_after_initial_noise(self, model, cond, short_sched):
        """With eta = 0 only x_T is random: a fixed x_T ignores the seed."""
        x_T = torch.randn(2, 3, 16, 16, generator=torch.Generator().manual_seed(9))
        sampler = DDIMSampler(short_sched, 5)

        a = sampler.sample(model, cond, seed=0, x_T=x_T).images
        b = sampler.sample(model, cond, seed=123, x_T=x_T).images

        assert torch.equal(a, b)

    def test_stochastic_eta_uses_seed(self, model, cond, short_sched):
        x_T = torch.randn(2, 3, 16, 16, generator=torch.Generator().manual_seed(9))
        sampler = DDIMSampler(short_sched, 5, eta=1.0)

        a = sampler.sample(model, cond, seed=0, x_T=x_T).images
        b = sampler.sample(model, cond, seed=1, x_T=x_T).images

        assert not torch.equal(a, b)

    def test_invalid_step_count(self, short_sched):
        with pytest.raises(InvalidRangeError):
            DDIMSampler(short_sched, 0)

    def test_gaussian_oracle(self, posterior_mean_model, gaussian_cond, sched):
        images = DDIMSampler(sched, sched.T).sample(posterior_mean_model, gaussian_cond, seed=0).images

        assert abs(float(images.mean()) - GAUSS_MEAN) < 0.02 * GAUSS_MEAN


class TestEvalCounter:
    def test_counts_batched_calls(self, model, cond):
        counter = EvalCounter(model)
        x = torch.zeros(2, 3, 16, 16)
        counter(x, 3, cond)
        counter(x, 4, cond)

        assert counter.calls == 2
        assert counter.config is model.config


class TestFactory:
    """Test method parsing and sampler construction."""

    @pytest.mark.parametrize(
        "spec,expected",
        [("ddim:100", ("ddim", 100)), ("consistency:8", ("consistency", 8)), ("ancestral", ("ancestral", None)),
         (" DDIM:4 ", ("ddim", 4))],
    )
    def test_parse(self, spec, expected):
        assert parse_method(spec) == expected

    @pytest.mark.parametrize("spec", ["euler:4", "ancestral:5", "consistency", "ddim:0", "ddim:x"])
    def test_parse_errors(self, spec):
        with pytest.raises(ValidationError):
            parse_method(spec)

    def test_make_sampler_types(self, short_sched, params):
        assert isinstance(make_sampler("ancestral", short_sched, params), AncestralSampler)
        assert isinstance(make_sampler("ddim:4", short_sched, params), DDIMSampler)
        sampler = make_sampler("consistency:4", short_sched, params, renoise="literal")
        assert isinstance(sampler, ConsistencySampler)
        assert sampler.renoise == "literal"

    def test_stats_accumulate(self, model, cond, short_sched, params):
        sampler = make_sampler("consistency:2", short_sched, params)
        sampler.sample(model, cond)
        sampler.sample(model, cond)

        assert sampler.stats["calls"] == 2
        assert sampler.stats["model_evals"] == 4
        sampler.reset_stats()
        assert sampler.stats["calls"] == 0


class TestSamplerPerformance:
    @pytest.mark.benchmark
    def test_one_step_latency(self, benchmark, model, cond, short_sched, params):
        """One-evaluation sampling of a small batch."""
        sampler = ConsistencySampler(short_sched, params, 1)

        result = benchmark(sampler.sample, model, cond, 0)

        assert result.n_evals == 1
