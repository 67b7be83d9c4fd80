"""
Evaluation of a trained generator on a held-out split.

For every requested evaluation count the split is translated in a fixed
order with seeds derived from (eval seed, batch index); PSNR, SSIM and the
FID-proxy are reported per count and written as CSV and JSON next to a
quality curve and a qualitative grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import pandas as pd
import torch
import torch.nn as nn

from ..benchmarks.analysis import emit_grid, monotonicity_violations, plot_quality_curve
from ..data.dataset import PairedTileDataset
from ..data.tiles import load_condition, save_png
from ..diffusion.schedule import NoiseSchedule
from ..metrics.embedder import RandomConvEmbedder
from ..metrics.report import MetricReport, evaluate_images
from ..models.denoiser import Denoiser, freeze, init_denoiser
from ..samplers.factory import make_sampler, parse_method
from ..utils.checkpoint import load_checkpoint
from ..utils.config import ConsistencyParams, TrainConfig, resolve_device
from ..utils.errors import CheckpointError, DataError
from ..utils.logging import sampler_logger
from ..utils.progress import ProgressTracker
from ..utils.seeding import derive_seed
from ..utils.serialization import ResultsSerializer
from .common import load_dataset

logger = sampler_logger()


@dataclass
class LoadedGenerator:
    model: Denoiser
    sched: NoiseSchedule
    params: ConsistencyParams
    config: TrainConfig
    role: str
    iteration: int


def load_generator(path: Path, use_ema: bool = False, device: torch.device | None = None) -> LoadedGenerator:
    """
    Frozen teacher or student network from a checkpoint.

    Raises:
        CheckpointError: discriminator checkpoint, or EMA requested but absent.
    """
    device = device or resolve_device()
    ckpt = load_checkpoint(path, device=device)
    if ckpt.role == "discriminator":
        raise CheckpointError(f"{path} holds a discriminator; sampling needs a teacher or student")
    config = ckpt.train_config
    model = init_denoiser(config.denoiser, seed=0).to(device)
    ckpt.load_into(model, use_ema=use_ema)
    return LoadedGenerator(
        model=freeze(model),
        sched=ckpt.schedule,
        params=config.consistency,
        config=config,
        role=ckpt.role,
        iteration=ckpt.iteration,
    )


def translate_dataset(
    model: nn.Module,
    sampler,
    dataset: PairedTileDataset,
    seed: int,
    batch_size: int,
    device: torch.device,
) -> tuple[torch.Tensor, int]:
    """Translate every tile in order; returns (predictions on CPU, evaluations per batch)."""
    outputs = []
    n_evals = 0
    for index, batch in enumerate(dataset.batches(batch_size)):
        result = sampler.sample(model, batch.cond.to(device), seed=derive_seed(seed, index))
        outputs.append(result.images.cpu())
        n_evals = result.n_evals
    return torch.cat(outputs), n_evals


def _method_specs(method: str, n_evals_list: Sequence[int]) -> list[str]:
    """``ddim`` → [ddim:1, ddim:2, ...]; ``ancestral`` and ``name:N`` stay single."""
    name, _, count = method.partition(":")
    if count or name == "ancestral":
        parse_method(method)
        return [method]
    return [f"{name}:{k}" for k in n_evals_list]


def evaluate(
    checkpoint: Path,
    manifest: Path | None = None,
    n_evals_list: Sequence[int] | None = None,
    method: str = "consistency",
    use_ema: bool = False,
    output_dir: Path | None = None,
    progress: ProgressTracker | None = None,
) -> list[MetricReport]:
    """
    Score a checkpoint on a test split for several evaluation counts.

    ``method`` is ``consistency``, ``ddim`` (both swept over
    ``n_evals_list``), ``ancestral``, or a fixed ``name:N``.

    Writes metrics_<method>_<n>.csv, summary.json, quality_curve.png and
    grid.png to ``output_dir`` (default ``<run output_dir>/eval``).
    """
    progress = progress or ProgressTracker(enabled=False)
    device = resolve_device()
    gen = load_generator(checkpoint, use_ema=use_ema, device=device)
    ecfg = gen.config.evaluation
    n_evals_list = list(n_evals_list or ecfg.n_evals)
    dataset = load_dataset(manifest or gen.config.data.test_manifest, gen.config.denoiser, split="test")
    serializer = ResultsSerializer(Path(output_dir or Path(gen.config.output_dir) / "eval"))
    embedder = RandomConvEmbedder(seed=ecfg.embedder_seed, in_channels=gen.config.denoiser.target_channels)
    targets = torch.stack([tile.target for tile in dataset.tiles])
    ids = [tile.id for tile in dataset.tiles]

    logger.info("evaluation_started", checkpoint=str(checkpoint), role=gen.role, method=method,
                n_tiles=len(dataset), use_ema=use_ema)

    reports: list[MetricReport] = []
    grid_columns: list[torch.Tensor] = []
    for spec in progress.iterate(_method_specs(method, n_evals_list), "Evaluating"):
        sampler = make_sampler(spec, gen.sched, gen.params, renoise=gen.config.distill.renoise)
        preds, n_evals = translate_dataset(gen.model, sampler, dataset, ecfg.seed, ecfg.batch_size, device)
        name = spec.partition(":")[0]
        report = evaluate_images(preds, targets, ids, embedder=embedder, method=name, n_evals=n_evals)
        report.extra["latency_s"] = sampler.stats["total_time"]
        serializer.results_dir.mkdir(parents=True, exist_ok=True)
        report.to_dataframe().to_csv(serializer.results_dir / f"metrics_{name}_{n_evals}.csv", index=False)
        reports.append(report)
        grid_columns.append(preds[: ecfg.grid_rows])
        logger.info("evaluation_point", **report.summary())

    summary = pd.DataFrame([r.summary() for r in reports])
    violations = monotonicity_violations(summary) if len(reports) > 1 else []
    serializer.save_result(
        {
            "checkpoint": str(checkpoint),
            "role": gen.role,
            "iteration": gen.iteration,
            "use_ema": use_ema,
            "results": [r.summary() for r in reports],
            "monotonicity_violations": violations,
        },
        "summary.json",
    )
    plot_quality_curve(summary, serializer.results_dir / "quality_curve.png", title=f"{method} ({gen.role})")

    n_rows = min(ecfg.grid_rows, len(dataset))
    rows = [
        [dataset.tiles[i].cond, dataset.tiles[i].target, *(col[i] for col in grid_columns)]
        for i in range(n_rows)
    ]
    emit_grid(rows, serializer.results_dir / "grid.png")
    return reports


def sample_images(
    checkpoint: Path,
    inputs: Sequence[Path],
    output_dir: Path,
    method: str = "consistency:1",
    seed: int = 0,
    use_ema: bool = False,
) -> list[Path]:
    """Translate condition image files and write one PNG per input."""
    if not inputs:
        raise DataError("no condition images given")
    device = resolve_device()
    gen = load_generator(checkpoint, use_ema=use_ema, device=device)
    dcfg = gen.config.denoiser
    sampler = make_sampler(method, gen.sched, gen.params, renoise=gen.config.distill.renoise)
    written = []
    for index, path in enumerate(inputs):
        cond = load_condition(path, dcfg.tile_size, channels=dcfg.condition_channels).unsqueeze(0).to(device)
        result = sampler.sample(gen.model, cond, seed=derive_seed(seed, index))
        written.append(save_png(result.images[0], Path(output_dir) / f"{Path(path).stem}_{sampler.name.replace(':', '')}.png"))
    logger.info("samples_written", n=len(written), method=sampler.name, output_dir=str(output_dir))
    return written


def compare_ablation(adversarial: Sequence[MetricReport], plain: Sequence[MetricReport]) -> pd.DataFrame:
    """
    Side-by-side scores of the adversarial and the pure-consistency student.

    One row per evaluation count present in both sweeps. ``adv_not_worse``
    is True when the adversarial FID-proxy does not exceed the plain one;
    a False row is logged as a warning and left for the caller to report.
    Rows where either FID-proxy is missing get ``adv_not_worse = None``.
    """
    plain_by_count = {r.n_evals: r for r in plain}
    rows = []
    for adv in adversarial:
        base = plain_by_count.get(adv.n_evals)
        if base is None:
            continue
        comparable = adv.fid_proxy is not None and base.fid_proxy is not None
        row = {
            "n_evals": adv.n_evals,
            "fid_adv": adv.fid_proxy,
            "fid_no_adv": base.fid_proxy,
            "psnr_adv": adv.mean_psnr,
            "psnr_no_adv": base.mean_psnr,
            "ssim_adv": adv.mean_ssim,
            "ssim_no_adv": base.mean_ssim,
            "adv_not_worse": (adv.fid_proxy <= base.fid_proxy) if comparable else None,
        }
        if row["adv_not_worse"] is False:
            logger.warning("adversarial_fid_worse", n_evals=adv.n_evals,
                           fid_adv=adv.fid_proxy, fid_no_adv=base.fid_proxy)
        rows.append(row)
    return pd.DataFrame(rows, columns=[
        "n_evals", "fid_adv", "fid_no_adv", "psnr_adv", "psnr_no_adv", "ssim_adv", "ssim_no_adv", "adv_not_worse",
    ])
