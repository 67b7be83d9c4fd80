"""
Adversarial consistency distillation.

The student starts as a copy of the frozen teacher and learns to map any
noisy input straight to the teacher's one-step clean estimate of a
slightly noisier point on the same trajectory. A discriminator built on
the teacher's encoder is trained alongside with the hinge loss and feeds
the student an adversarial term weighted by ``lambda_adv``.

Per iteration (one update each, simultaneous gradients):

1. ``distill_step`` gives the student losses and its prediction.
2. The discriminator loss is computed on that prediction, detached.
3. Both losses are back-propagated, then the discriminator and the
   student take one clipped AdamW step each.
"""
from __future__ import annotations

from pathlib import Path

import torch

from ..benchmarks.analysis import emit_grid
from ..data.dataset import batch_for_iteration
from ..diffusion.adversarial import d_loss
from ..diffusion.consistency import distill_step, self_consistency_gap
from ..diffusion.ema import ema_update
from ..diffusion.schedule import make_schedule
from ..models.denoiser import clone_weights, freeze, init_denoiser
from ..models.discriminator import Discriminator
from ..samplers.consistency import ConsistencySampler
from ..utils.checkpoint import load_checkpoint, save_checkpoint
from ..utils.config import TrainConfig, resolve_device
from ..utils.errors import FrozenTeacherError
from ..utils.logging import training_logger
from ..utils.progress import ProgressTracker
from ..utils.seeding import make_generator
from ..utils.validation import check_finite
from .common import (
    TRAIN_LOG,
    RunResult,
    checkpoint_dir,
    fingerprint,
    load_dataset,
    prepare_output,
    probe_batch,
    start_log,
)
from .optim import apply_update, build_optimizer

STREAM_STEP = 1
STREAM_GAP = 2

logger = training_logger()


def load_teacher(path: Path, config: TrainConfig, device: torch.device):
    """
    Frozen teacher from a checkpoint; its architecture comes from the checkpoint.

    Raises:
        CheckpointError: not a teacher checkpoint, or its schedule differs
            from ``config.schedule``.
    """
    sched = make_schedule(config.schedule)
    ckpt = load_checkpoint(path, expected_role="teacher", schedule=sched, device=device)
    denoiser_config = ckpt.train_config.denoiser
    if denoiser_config != config.denoiser:
        logger.warning("denoiser_config_from_teacher", configured=config.denoiser.model_dump(),
                       teacher=denoiser_config.model_dump())
    teacher = init_denoiser(denoiser_config, seed=0).to(device)
    ckpt.load_into(teacher)
    return freeze(teacher), sched


def _write_grid(student, sched, config, probe, path: Path) -> Path:
    sampler = ConsistencySampler(sched, config.consistency, config.distill.grid_evals, renoise=config.distill.renoise)
    result = sampler.sample(student, probe.cond, seed=config.evaluation.seed)
    rows = [[probe.cond[i], probe.target[i], result.images[i]] for i in range(len(probe))]
    return emit_grid(rows, path)


def run_distill(
    config: TrainConfig,
    teacher_ckpt: Path,
    resume: Path | None = None,
    progress: ProgressTracker | None = None,
) -> RunResult:
    """
    Distill the teacher in ``teacher_ckpt`` into a few-step student.

    ``resume`` is a checkpoint directory written by an earlier run
    (``checkpoints/iter_<k>/``) holding student and, when adversarial,
    discriminator files.

    Writes ``<output_dir>/distill/``: config.json, train_log.jsonl,
    grids/iter_<k>.png, summary.json, ``student.safetensors`` and
    ``discriminator.safetensors``.

    Raises:
        CheckpointError: bad teacher or resume checkpoint.
        FrozenTeacherError: the teacher's weights changed during the run.
        NumericalHealthError: a loss became NaN or Inf.
    """
    progress = progress or ProgressTracker(enabled=False)
    device = resolve_device()
    dcfg = config.distill
    params = config.consistency
    lambda_adv = config.effective_lambda_adv
    adversarial = dcfg.adversarial and lambda_adv > 0

    teacher, sched = load_teacher(teacher_ckpt, config, device)
    config = config.model_copy(update={"denoiser": teacher.config})
    teacher_hash = fingerprint(teacher)
    dataset = load_dataset(config.data.train_manifest, config.denoiser)
    serializer = prepare_output(config, "distill")

    student = clone_weights(teacher)
    student.requires_grad_(True)
    student.train()
    opt_s, sched_s = build_optimizer(student.parameters(), dcfg.student_optimizer)

    disc = opt_d = sched_d = None
    if adversarial:
        disc = Discriminator.from_denoiser(teacher)
        disc.train()
        opt_d, sched_d = build_optimizer(disc.parameters(), dcfg.disc_optimizer)

    ema = None
    if dcfg.ema:
        ema = freeze(clone_weights(student))

    probe = probe_batch(dataset, config.evaluation.grid_rows, device)
    gap_batch = probe_batch(dataset, config.batch_size, device)

    start = 0
    gap_init = None
    if resume is not None:
        resume = Path(resume)
        s_ckpt = load_checkpoint(resume / "student.safetensors", expected_role="student", schedule=sched, device=device)
        s_ckpt.load_into(student)
        s_ckpt.restore_optimizer(opt_s, sched_s)
        if ema is not None:
            s_ckpt.load_into(ema, use_ema=True)
        if disc is not None:
            d_ckpt = load_checkpoint(
                resume / "discriminator.safetensors", expected_role="discriminator", schedule=sched, device=device
            )
            d_ckpt.load_into(disc)
            d_ckpt.restore_optimizer(opt_d, sched_d)
        start = s_ckpt.iteration
        gap_init = s_ckpt.header.extra.get("gap_init")
        logger.info("distill_resumed", checkpoint=str(resume), iteration=start)
    if gap_init is None:
        gap_init = self_consistency_gap(
            student, params, sched, gap_batch, make_generator(config.seed, 0, STREAM_GAP, device=device), dcfg.gap_pairs
        )
    start_log(serializer, start)

    logger.info(
        "distillation_started",
        iterations=dcfg.iterations,
        lambda_adv=lambda_adv,
        adversarial=adversarial,
        skip=dcfg.skip,
        ema=dcfg.ema,
        gap_init=gap_init,
        device=str(device),
    )

    def save(directory: Path, done: int) -> dict[str, Path]:
        extra = {"gap_init": gap_init, "teacher": str(teacher_ckpt)}
        paths = {"student": save_checkpoint(
            directory / "student.safetensors", "student", student, sched, config, done, config.seed,
            ema=ema, optimizer=opt_s, scheduler=sched_s, extra=extra,
        )}
        if disc is not None:
            paths["discriminator"] = save_checkpoint(
                directory / "discriminator.safetensors", "discriminator", disc, sched, config, done, config.seed,
                optimizer=opt_d, scheduler=sched_d, extra=extra,
            )
        return paths

    history: list[dict] = []
    checkpoints: dict[str, Path] = {}
    for iteration in progress.iterate(range(start, dcfg.iterations), "Distillation", total=dcfg.iterations - start):
        batch = batch_for_iteration(
            dataset, config.batch_size, config.seed, iteration, augment=config.data.augment
        ).to(device)
        gen = make_generator(config.seed, iteration, STREAM_STEP, device=device)
        report = distill_step(student, teacher, disc, batch, sched, params, lambda_adv, gen, skip=dcfg.skip)

        disc_loss = None
        if disc is not None:
            disc_loss = d_loss(disc, batch.target, report.pred_student, batch.cond)
            check_finite(disc_loss.detach(), "d_loss", iteration=iteration + 1)
            opt_d.zero_grad(set_to_none=True)
            disc_loss.backward()
        opt_s.zero_grad(set_to_none=True)
        report.l_total.backward()
        if disc is not None:
            apply_update(opt_d, sched_d, disc.parameters(), dcfg.disc_optimizer.grad_clip)
        grad_norm = apply_update(opt_s, sched_s, student.parameters(), dcfg.student_optimizer.grad_clip)
        if ema is not None:
            ema_update(ema, student, dcfg.ema_decay)

        done = iteration + 1
        record = {
            "iteration": done,
            **report.scalars(),
            "d_loss": float(disc_loss.detach()) if disc_loss is not None else None,
            "lambda_adv": lambda_adv,
            "lr": sched_s.get_last_lr()[0],
            "grad_norm": grad_norm,
        }
        serializer.append_to_log(record, TRAIN_LOG)
        history.append(record)
        if done % dcfg.log_every == 0:
            logger.info("distill_progress", **record)
        if done % dcfg.grid_every == 0:
            grid = _write_grid(ema if ema is not None else student, sched, config, probe, serializer.results_dir / "grids" / f"iter_{done}.png")
            logger.debug("grid_written", path=str(grid))
        if done % dcfg.save_every == 0 and done < dcfg.iterations:
            for role, path in save(checkpoint_dir(serializer, done), done).items():
                checkpoints[f"{role}_iter_{done}"] = path

    if fingerprint(teacher) != teacher_hash:
        raise FrozenTeacherError("teacher weights changed during distillation")

    gap_final = self_consistency_gap(
        student, params, sched, gap_batch, make_generator(config.seed, 0, STREAM_GAP, device=device), dcfg.gap_pairs
    )
    checkpoints.update(save(serializer.results_dir, dcfg.iterations))
    summary = {
        "gap_init": gap_init,
        "gap_final": gap_final,
        "gap_reduced": gap_final < gap_init,
        "lambda_adv": lambda_adv,
        "iterations": dcfg.iterations,
        "teacher_sha256": teacher_hash,
    }
    serializer.save_result(summary, "summary.json")
    logger.info("distillation_finished", checkpoint=str(checkpoints["student"]), **summary)
    return RunResult(output_dir=serializer.results_dir, checkpoints=checkpoints, history=history, summary=summary)
