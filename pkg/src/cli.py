"""
Command Line Interface for SAR-to-optical consistency distillation.

Usage:
    python -m src.cli make-toy --n 512 --size 64 --seed 7 --out data/toy
    python -m src.cli train-teacher --config configs/toy.json
    python -m src.cli distill --config configs/toy.json --teacher runs/toy/teacher/teacher.safetensors
    python -m src.cli sample --checkpoint runs/toy/distill/student.safetensors --input tiles/ --steps 8 --out out/
    python -m src.cli evaluate --checkpoint runs/toy/distill/student.safetensors --steps 1,2,4,8,16
    python -m src.cli bench --checkpoint runs/toy/distill/student.safetensors --methods ancestral,ddim:100,consistency:8
"""
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional

import typer
import yaml
from rich.console import Console
from rich.table import Table

from .utils.config import ensure_directories, load_train_config, settings
from .utils.errors import Sar2OptError
from .utils.logging import get_logger, setup_logging
from .utils.progress import ProgressTracker

app = typer.Typer(help="SAR-to-optical translation with few-step consistency distillation")
console = Console()

IMAGE_SUFFIXES = {".png", ".tif", ".tiff", ".jpg", ".jpeg"}


@app.callback()
def main_callback(
    debug: bool = typer.Option(False, "--debug", "-d", help="Enable debug mode"),
    log_level: str = typer.Option(None, "--log-level", "-l", help="Log level (default from SAR2OPT_LOG_LEVEL)"),
):
    """Train, distill, sample, evaluate and benchmark SAR-to-optical diffusion models."""
    ensure_directories()
    setup_logging("DEBUG" if debug or settings.debug else (log_level or settings.log_level))


@contextmanager
def _cli_errors():
    """Report package errors as one red line and exit with status 1."""
    try:
        yield
    except Sar2OptError as e:
        get_logger("cli").error("command_failed", error_type=type(e).__name__, error=str(e))
        console.print(f"[bold red]{type(e).__name__}:[/bold red] {e}")
        raise typer.Exit(code=1)


def _parse_overrides(items: Optional[List[str]]) -> dict:
    """``["distill.lambda_adv=0.5"]`` → {"distill.lambda_adv": 0.5} (values parsed as YAML scalars)."""
    overrides = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise typer.BadParameter(f"expected key=value, got '{item}'")
        overrides[key.strip()] = yaml.safe_load(value)
    return overrides


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"expected comma-separated integers, got '{text}'") from e


def _collect_inputs(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    return [path]


def _show_summary(title: str, data: dict):
    table = Table(title=title)
    table.add_column("Key")
    table.add_column("Value")
    for key, value in data.items():
        table.add_row(str(key), f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)


@app.command("make-toy")
def make_toy(
    n: int = typer.Option(512, "--n", help="Training pairs"),
    n_test: int = typer.Option(64, "--n-test", help="Test pairs"),
    size: int = typer.Option(64, "--size", help="Tile size in pixels"),
    seed: int = typer.Option(7, "--seed", help="Generator seed"),
    out: Path = typer.Option(Path("data/toy"), "--out", "-o", help="Output directory"),
):
    """Generate a synthetic paired dataset (speckled condition, colored target)."""
    from .data.generators import make_toy_splits

    with _cli_errors():
        splits = make_toy_splits(out, n_train=n, n_test=n_test, tile_size=size, seed=seed)
    console.print(
        f"[green]Wrote {len(splits['train'])} train and {len(splits['test'])} test pairs to {out}[/green]"
    )


@app.command("train-teacher")
def train_teacher_cmd(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Run config (JSON or YAML)"),
    preset: Optional[str] = typer.Option(None, "--preset", "-p", help="Preset: toy or full"),
    overrides: Optional[List[str]] = typer.Option(None, "--set", "-s", help="Override, e.g. teacher.iterations=100"),
    resume: Optional[Path] = typer.Option(None, "--resume", help="Teacher checkpoint to resume from"),
):
    """Train the noise-prediction teacher."""
    from .training.teacher import train_teacher

    with _cli_errors():
        cfg = load_train_config(config, preset, _parse_overrides(overrides))
        result = train_teacher(cfg, resume=resume, progress=ProgressTracker())
    console.print(f"[bold green]Teacher saved to {result.checkpoints['final']}[/bold green]")
    _show_summary("Teacher training", result.summary)


@app.command("distill")
def distill_cmd(
    teacher: Path = typer.Option(..., "--teacher", "-t", help="Teacher checkpoint"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Run config (JSON or YAML)"),
    preset: Optional[str] = typer.Option(None, "--preset", "-p", help="Preset: toy or full"),
    lambda_adv: Optional[float] = typer.Option(None, "--lambda-adv", help="Adversarial loss weight"),
    no_adv: bool = typer.Option(False, "--no-adv", help="Pure consistency distillation (no discriminator)"),
    overrides: Optional[List[str]] = typer.Option(None, "--set", "-s", help="Override, e.g. distill.skip=2"),
    resume: Optional[Path] = typer.Option(None, "--resume", help="Checkpoint directory to resume from"),
):
    """Distill a teacher into a few-step student."""
    from .training.distill import run_distill

    extra = _parse_overrides(overrides)
    if lambda_adv is not None:
        extra["distill.lambda_adv"] = lambda_adv
    if no_adv:
        extra["distill.adversarial"] = False
    with _cli_errors():
        cfg = load_train_config(config, preset, extra)
        result = run_distill(cfg, teacher, resume=resume, progress=ProgressTracker())
    console.print(f"[bold green]Student saved to {result.checkpoints['student']}[/bold green]")
    _show_summary("Distillation", result.summary)


@app.command("sample")
def sample_cmd(
    checkpoint: Path = typer.Option(..., "--checkpoint", help="Student or teacher checkpoint"),
    input: Path = typer.Option(..., "--input", "-i", help="Condition image or directory"),
    steps: int = typer.Option(1, "--steps", "-n", help="Denoiser evaluations"),
    method: str = typer.Option("consistency", "--method", "-m", help="consistency, ddim or ancestral"),
    seed: int = typer.Option(0, "--seed", help="Sampling seed"),
    out: Path = typer.Option(Path("runs/samples"), "--out", "-o", help="Output directory"),
    ema: bool = typer.Option(False, "--ema", help="Use EMA weights"),
):
    """Translate condition images."""
    from .training.evaluate import sample_images

    spec = method if method == "ancestral" else f"{method}:{steps}"
    with _cli_errors():
        written = sample_images(checkpoint, _collect_inputs(input), out, method=spec, seed=seed, use_ema=ema)
    console.print(f"[green]Wrote {len(written)} images to {out}[/green]")


@app.command("evaluate")
def evaluate_cmd(
    checkpoint: Path = typer.Option(..., "--checkpoint", help="Student or teacher checkpoint"),
    manifest: Optional[Path] = typer.Option(None, "--manifest", help="Test manifest (default from the run config)"),
    steps: str = typer.Option("1,2,4,8,16", "--steps", help="Comma-separated evaluation counts"),
    method: str = typer.Option("consistency", "--method", "-m", help="consistency, ddim, ancestral or name:N"),
    ema: bool = typer.Option(False, "--ema", help="Use EMA weights"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
):
    """Score a checkpoint with PSNR, SSIM and the FID-proxy."""
    from .training.evaluate import evaluate

    with _cli_errors():
        reports = evaluate(
            checkpoint, manifest, _parse_int_list(steps), method=method, use_ema=ema,
            output_dir=out, progress=ProgressTracker(),
        )
    table = Table(title=f"Evaluation ({method})")
    for col in ("n_evals", "PSNR (dB)", "SSIM", "FID-proxy"):
        table.add_column(col)
    for r in reports:
        fid = "-" if r.fid_proxy is None else f"{r.fid_proxy:.4f}"
        table.add_row(str(r.n_evals), f"{r.mean_psnr:.2f}", f"{r.mean_ssim:.4f}", fid)
    console.print(table)


@app.command("bench")
def bench_cmd(
    checkpoint: Path = typer.Option(..., "--checkpoint", help="Student or teacher checkpoint"),
    methods: str = typer.Option("ancestral,ddim:100,consistency:8,consistency:16", "--methods", help="Sampler specs"),
    reps: int = typer.Option(5, "--reps", help="Timed repetitions (>= 3)"),
    warmup: int = typer.Option(1, "--warmup", help="Discarded warmup calls"),
    batch: int = typer.Option(1, "--batch", "-b", help="Conditions per call"),
    out: Path = typer.Option(Path("runs/bench"), "--out", "-o", help="Output directory"),
):
    """Measure sampling latency and the speedup over ancestral sampling."""
    import torch

    from .benchmarks.analysis import plot_latency
    from .benchmarks.runner import BenchmarkRunner
    from .training.evaluate import load_generator

    spec_list = [m.strip() for m in methods.split(",") if m.strip()]
    with _cli_errors():
        gen = load_generator(checkpoint)
        dcfg = gen.config.denoiser
        device = next(gen.model.parameters()).device
        cond = torch.zeros(batch, dcfg.condition_channels, dcfg.tile_size, dcfg.tile_size, device=device)
        runner = BenchmarkRunner(out, progress=ProgressTracker())
        df = runner.run(gen.model, gen.sched, gen.params, cond, spec_list, reps=reps, warmup=warmup)
        csv_path = runner.save_results("latency.csv")
        plot_latency(df, out / "latency.png")
    console.print(df.to_string(index=False))
    console.print(f"[green]Saved {csv_path}[/green]")


if __name__ == "__main__":
    app()
