"""
End-to-end checks at toy scale.

These train real models and time real sampling runs; they are skipped
unless pytest is given ``--runslow``.
"""
import warnings

import numpy as np
import pytest
import torch

from src.benchmarks import BenchmarkRunner
from src.data.generators import make_toy_splits
from src.diffusion.schedule import make_linear_schedule
from src.models.denoiser import init_denoiser
from src.training import compare_ablation, evaluate, run_distill, train_teacher
from src.utils.config import ConsistencyParams, DenoiserConfig, load_train_config, settings

EVAL_COUNTS = [1, 2, 4, 8, 16]


@pytest.fixture
def any_device(monkeypatch):
    """Let the slow runs use an accelerator when one is present."""
    monkeypatch.setattr(settings, "device", "auto")


@pytest.mark.slow
class TestToyPipeline:
    """Teacher training, distillation and evaluation with the toy preset."""

    def test_student_quality_and_ablation(self, tmp_path, any_device):
        """Few-step quality targets; the no-adv ablation is compared on FID-proxy and only warned about."""
        data = tmp_path / "toy"
        make_toy_splits(data, n_train=512, n_test=64, tile_size=64, seed=7)
        overrides = {
            "data.train_manifest": str(data / "manifest_train.json"),
            "data.test_manifest": str(data / "manifest_test.json"),
            "output_dir": str(tmp_path / "run"),
        }
        config = load_train_config(preset="toy", overrides=overrides)

        teacher = train_teacher(config).checkpoints["final"]
        distilled = run_distill(config, teacher)
        student = distilled.checkpoints["student"]

        ancestral = evaluate(teacher, method="ancestral", output_dir=tmp_path / "eval" / "ancestral")[0]
        clone = evaluate(teacher, n_evals_list=[8], output_dir=tmp_path / "eval" / "clone")[0]
        sweep = evaluate(student, n_evals_list=EVAL_COUNTS, output_dir=tmp_path / "eval" / "student")
        by_count = {r.n_evals: r for r in sweep}

        assert abs(by_count[8].mean_psnr - ancestral.mean_psnr) <= 2.0
        assert by_count[8].mean_psnr >= clone.mean_psnr + 3.0
        assert distilled.summary["gap_final"] <= 0.5 * distilled.summary["gap_init"]
        assert by_count[16].mean_psnr >= by_count[1].mean_psnr + 1.0
        psnr = [by_count[k].mean_psnr for k in EVAL_COUNTS]
        ssim = [by_count[k].mean_ssim for k in EVAL_COUNTS]
        assert all(b >= a - 0.3 for a, b in zip(psnr, psnr[1:]))
        assert all(b >= a - 0.01 for a, b in zip(ssim, ssim[1:]))

        plain_config = load_train_config(
            preset="toy",
            overrides={**overrides, "distill.adversarial": False, "output_dir": str(tmp_path / "run_no_adv")},
        )
        plain = run_distill(plain_config, teacher).checkpoints["student"]
        plain_sweep = evaluate(plain, n_evals_list=EVAL_COUNTS, output_dir=tmp_path / "eval" / "no_adv")
        ablation = compare_ablation(sweep, plain_sweep)

        assert list(ablation["n_evals"]) == EVAL_COUNTS
        assert ablation["fid_adv"].notna().all() and ablation["fid_no_adv"].notna().all()
        assert (tmp_path / "eval" / "no_adv" / "grid.png").exists()
        worse = ablation[~ablation["adv_not_worse"].astype(bool)]
        if len(worse):
            warnings.warn(
                f"adversarial student has a higher FID-proxy than the no-adv student at n_evals="
                f"{list(worse['n_evals'])}",
                stacklevel=1,
            )


@pytest.mark.slow
class TestLatencySpeedup:
    """Ancestral sampling against few-step consistency sampling on one model."""

    def test_speedup(self, tmp_path, any_device):
        config = DenoiserConfig(base_width=16, depth=2, tile_size=32)
        device = torch.device("cuda" if torch.cuda.is_available() else "cpu")
        model = init_denoiser(config, seed=0).to(device).eval()
        sched = make_linear_schedule(1000, 1e-4, 0.02)
        cond = torch.zeros(1, 1, 32, 32, device=device)

        df = BenchmarkRunner(tmp_path).run(
            model, sched, ConsistencyParams(), cond, ["ancestral", "consistency:8", "consistency:16"], reps=3
        ).set_index("method")

        assert df.loc["consistency:8", "speedup_vs_ancestral"] >= 60
        assert df.loc["consistency:16", "speedup_vs_ancestral"] >= 30
        per_eval = df["per_eval_ms"].to_numpy()
        assert np.all(np.abs(per_eval / np.median(per_eval) - 1) <= 0.5)
