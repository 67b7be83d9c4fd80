"""
Teacher training: a conditional noise predictor fit with the standard
ε-prediction objective.

Each iteration draws a batch, one step per example uniformly from [1, T]
and Gaussian noise, and minimizes ‖ε̂(x_t, t, cond) − ε‖². Every random
draw is keyed on (seed, iteration), so a run resumed from a checkpoint
continues exactly where the interrupted run would have gone.
"""
from __future__ import annotations

from pathlib import Path

import torch
import torch.nn.functional as F

from ..data.dataset import batch_for_iteration
from ..diffusion.schedule import forward_diffuse, make_schedule
from ..models.denoiser import init_denoiser
from ..utils.checkpoint import load_checkpoint, save_checkpoint
from ..utils.config import TrainConfig, resolve_device
from ..utils.logging import training_logger
from ..utils.progress import ProgressTracker
from ..utils.seeding import make_generator
from ..utils.validation import check_finite
from .common import TRAIN_LOG, RunResult, checkpoint_dir, load_dataset, prepare_output, start_log
from .optim import apply_update, build_optimizer

STREAM_NOISE = 1

logger = training_logger()


def teacher_loss(model, sched, batch, generator: torch.Generator) -> torch.Tensor:
    """MSE between predicted and true noise at per-example steps t ~ U{1..T}."""
    x0 = batch.target
    device = generator.device
    t = torch.randint(1, sched.T + 1, (x0.shape[0],), generator=generator, device=device)
    noise = torch.randn(x0.shape, generator=generator, device=device, dtype=x0.dtype)
    x_t = forward_diffuse(sched, x0, t, noise)
    return F.mse_loss(model(x_t, t, batch.cond), noise)


def train_teacher(
    config: TrainConfig,
    resume: Path | None = None,
    progress: ProgressTracker | None = None,
) -> RunResult:
    """
    Train the teacher for ``config.teacher.iterations`` updates.

    Writes ``<output_dir>/teacher/``: config.json, train_log.jsonl (one
    record per iteration), periodic checkpoints and ``teacher.safetensors``.

    Raises:
        DataError: no usable training manifest.
        CheckpointError: ``resume`` is missing, not a teacher checkpoint or
            built for another schedule.
        NumericalHealthError: the loss became NaN or Inf.
    """
    progress = progress or ProgressTracker(enabled=False)
    device = resolve_device()
    tcfg = config.teacher
    sched = make_schedule(config.schedule)
    dataset = load_dataset(config.data.train_manifest, config.denoiser)
    serializer = prepare_output(config, "teacher")

    model = init_denoiser(config.denoiser, seed=config.seed).to(device)
    model.train()
    optimizer, scheduler = build_optimizer(model.parameters(), tcfg.optimizer)

    start = 0
    if resume is not None:
        ckpt = load_checkpoint(resume, expected_role="teacher", schedule=sched, device=device)
        ckpt.load_into(model)
        ckpt.restore_optimizer(optimizer, scheduler)
        start = ckpt.iteration
        logger.info("teacher_resumed", checkpoint=str(resume), iteration=start)
    start_log(serializer, start)

    logger.info(
        "teacher_training_started",
        iterations=tcfg.iterations,
        parameters=model.parameter_count(),
        device=str(device),
        T=sched.T,
    )

    history: list[dict] = []
    checkpoints: dict[str, Path] = {}
    for iteration in progress.iterate(range(start, tcfg.iterations), "Teacher training", total=tcfg.iterations - start):
        batch = batch_for_iteration(
            dataset, config.batch_size, config.seed, iteration, augment=config.data.augment
        ).to(device)
        gen = make_generator(config.seed, iteration, STREAM_NOISE, device=device)

        loss = teacher_loss(model, sched, batch, gen)
        check_finite(loss.detach(), "teacher_loss", iteration=iteration + 1)
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        grad_norm = apply_update(optimizer, scheduler, model.parameters(), tcfg.optimizer.grad_clip)

        done = iteration + 1
        record = {
            "iteration": done,
            "loss": float(loss.detach()),
            "lr": scheduler.get_last_lr()[0],
            "grad_norm": grad_norm,
        }
        serializer.append_to_log(record, TRAIN_LOG)
        history.append(record)
        if done % tcfg.log_every == 0:
            logger.info("teacher_progress", **record)

        if done % tcfg.save_every == 0 and done < tcfg.iterations:
            path = save_checkpoint(
                checkpoint_dir(serializer, done) / "teacher.safetensors",
                "teacher", model, sched, config, done, config.seed,
                optimizer=optimizer, scheduler=scheduler,
            )
            checkpoints[f"iter_{done}"] = path
            logger.info("checkpoint_saved", path=str(path), iteration=done)

    final = save_checkpoint(
        serializer.results_dir / "teacher.safetensors",
        "teacher", model, sched, config, tcfg.iterations, config.seed,
        optimizer=optimizer, scheduler=scheduler,
    )
    checkpoints["final"] = final
    tail = history[-tcfg.log_every:]
    summary = {"final_loss": sum(r["loss"] for r in tail) / len(tail)} if tail else {}
    logger.info("teacher_training_finished", checkpoint=str(final), **summary)
    return RunResult(output_dir=serializer.results_dir, checkpoints=checkpoints, history=history, summary=summary)
