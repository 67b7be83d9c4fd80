#!/usr/bin/env python3
"""
SAR-to-Optical Consistency Distillation - Main Entry Point

Runs the whole toy pipeline: synthetic data, teacher training,
adversarial distillation next to its no-adv ablation, evaluation of
teacher and students, and the latency benchmark.

Usage:
    python main.py                    # Toy pipeline end to end
    python -m src.cli --help          # Individual stages
"""
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))


def main():
    """Toy pipeline with a stage ledger and progress display."""
    import torch

    from src.benchmarks import BenchmarkRunner, plot_latency, plot_training_curves
    from src.data.generators import make_toy_splits
    from src.training import compare_ablation, evaluate, load_generator, run_distill, train_teacher
    from src.utils import ExperimentTracker, ProgressTracker
    from src.utils.config import ensure_directories, load_train_config, settings
    from src.utils.logging import get_logger, setup_logging

    ensure_directories()
    setup_logging(settings.log_level)
    logger = get_logger("main")

    tracker = ExperimentTracker(settings.paths.logs_dir)
    progress = ProgressTracker()

    data_root = settings.paths.data_dir / "toy"
    with tracker.stage("toy_data", role="data", root=str(data_root)) as rec:
        with progress.task("Generating toy dataset"):
            splits = make_toy_splits(data_root, n_train=512, n_test=64, tile_size=64, seed=7)
        rec.metrics.update(n_train=len(splits["train"]), n_test=len(splits["test"]))

    overrides = {
        "data.train_manifest": str(data_root / "manifest_train.json"),
        "data.test_manifest": str(data_root / "manifest_test.json"),
        "output_dir": str(settings.paths.runs_dir / "toy"),
    }
    config = load_train_config(preset="toy", overrides=overrides)
    no_adv_config = load_train_config(
        preset="toy",
        overrides={**overrides, "distill.adversarial": False, "output_dir": str(Path(config.output_dir) / "no_adv")},
    )
    logger.info("pipeline_started", preset=config.preset, output_dir=str(config.output_dir))

    with tracker.stage("teacher", role="teacher", iterations=config.teacher.iterations) as rec:
        teacher = train_teacher(config, progress=progress)
        rec.add_outputs(teacher.checkpoints)
        rec.metrics.update(teacher.summary)
    plot_training_curves(teacher.history, settings.paths.plots_dir / "teacher_loss.png", ["loss"])

    students = {}
    for name, run_config in (("distill", config), ("distill_no_adv", no_adv_config)):
        with tracker.stage(
            name, role="student", inputs={"teacher": teacher.checkpoints["final"]},
            lambda_adv=run_config.effective_lambda_adv,
        ) as rec:
            students[name] = run_distill(run_config, teacher.checkpoints["final"], progress=progress)
            rec.add_outputs(students[name].checkpoints)
            rec.metrics.update(students[name].summary)
        plot_training_curves(
            students[name].history, settings.paths.plots_dir / f"{name}_loss.png",
            ["l_consistency", "l_adv_g", "d_loss"],
        )
    student = students["distill"]

    eval_dir = Path(config.output_dir) / "eval"
    reports = {}
    for name, ckpt, method in (
        ("student", student.checkpoints["student"], "consistency"),
        ("student_no_adv", students["distill_no_adv"].checkpoints["student"], "consistency"),
        ("teacher_ddim", teacher.checkpoints["final"], "ddim"),
        ("teacher_ancestral", teacher.checkpoints["final"], "ancestral"),
    ):
        with tracker.stage(f"eval_{name}", role=name, inputs={"checkpoint": ckpt}, method=method) as rec:
            reports[name] = evaluate(ckpt, method=method, output_dir=eval_dir / name, progress=progress)
            rec.add_outputs({"dir": eval_dir / name})
            rec.metrics.update({f"psnr_{r.n_evals}": r.mean_psnr for r in reports[name]})
        for r in reports[name]:
            progress.log(
                f"{name} {r.method}:{r.n_evals}  PSNR {r.mean_psnr:.2f} dB  SSIM {r.mean_ssim:.4f}",
                style="bold blue",
            )

    ablation = compare_ablation(reports["student"], reports["student_no_adv"])
    ablation.to_csv(eval_dir / "ablation.csv", index=False)
    if ablation["adv_not_worse"].eq(False).any():
        progress.log("Adversarial student has a higher FID-proxy than the no-adv student.", style="bold yellow")

    bench_dir = Path(config.output_dir) / "bench"
    with tracker.stage("latency", role="student", inputs={"checkpoint": student.checkpoints["student"]}) as rec:
        gen = load_generator(student.checkpoints["student"])
        dcfg = gen.config.denoiser
        device = next(gen.model.parameters()).device
        cond = torch.zeros(1, dcfg.condition_channels, dcfg.tile_size, dcfg.tile_size, device=device)
        runner = BenchmarkRunner(bench_dir, progress=progress)
        df = runner.run(
            gen.model, gen.sched, gen.params, cond, ["ancestral", "ddim:50", "consistency:8", "consistency:16"]
        )
        rec.add_outputs({"table": runner.save_results("latency.csv")})
        plot_latency(df, bench_dir / "latency.png")
        rec.metrics.update({row["method"]: row["speedup_vs_ancestral"] for row in df.to_dict("records")})

    tracker.save_summary()
    progress.log("Pipeline complete.", style="bold green")
    return 0


if __name__ == "__main__":
    sys.exit(main())
