"""
Checkpoint container.

One safetensors file per network role. The file metadata carries a single
``header`` entry (JSON: format version, role, resolved config, schedule,
iteration, seed, optimizer hyperparameters, scheduler state); the tensors
are named ``model.*``, ``ema.*`` and ``optim.<param index>.<slot>``.

Training randomness is derived from (seed, iteration) alone, so the pair
stored in the header is the complete RNG state needed to resume.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import torch
import torch.nn as nn
from pydantic import BaseModel
from safetensors import safe_open
from safetensors.torch import save_file

from ..diffusion.schedule import NoiseSchedule, schedule_from_dict, schedule_to_dict, schedules_match
from .config import TrainConfig
from .errors import CheckpointError
from .serialization import dumps, loads

FORMAT_VERSION = 1
Role = Literal["teacher", "student", "discriminator"]


class CheckpointHeader(BaseModel):
    format_version: int = FORMAT_VERSION
    role: Role
    config: dict
    schedule: dict
    iteration: int
    seed: int
    has_ema: bool = False
    optimizer: list[dict] | None = None
    scheduler: dict | None = None
    extra: dict = {}


@dataclass
class Checkpoint:
    header: CheckpointHeader
    model_state: dict[str, torch.Tensor]
    ema_state: dict[str, torch.Tensor] | None = None
    optim_state: dict | None = None

    @property
    def role(self) -> str:
        return self.header.role

    @property
    def iteration(self) -> int:
        return self.header.iteration

    @property
    def schedule(self) -> NoiseSchedule:
        return schedule_from_dict(self.header.schedule)

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig(**self.header.config)

    def load_into(self, model: nn.Module, use_ema: bool = False) -> nn.Module:
        """Copy stored weights into ``model``."""
        if use_ema:
            if self.ema_state is None:
                raise CheckpointError("checkpoint holds no EMA weights")
            state = self.ema_state
        else:
            state = self.model_state
        try:
            model.load_state_dict(state)
        except RuntimeError as e:
            raise CheckpointError(f"weights do not fit the model: {e}") from e
        return model

    def restore_optimizer(self, optimizer: torch.optim.Optimizer, scheduler=None) -> None:
        if self.optim_state is None:
            raise CheckpointError("checkpoint holds no optimizer state")
        optimizer.load_state_dict(self.optim_state)
        if scheduler is not None and self.header.scheduler is not None:
            scheduler.load_state_dict(dict(self.header.scheduler))


def _contiguous(state: dict[str, torch.Tensor], prefix: str) -> dict[str, torch.Tensor]:
    return {f"{prefix}.{k}": v.detach().to("cpu").contiguous().clone() for k, v in state.items()}


def _flatten_optimizer(optimizer: torch.optim.Optimizer) -> tuple[dict[str, torch.Tensor], list[dict]]:
    sd = optimizer.state_dict()
    tensors = {}
    for idx, slots in sd["state"].items():
        for slot, value in slots.items():
            if not isinstance(value, torch.Tensor):
                value = torch.tensor(value)
            tensors[f"optim.{idx}.{slot}"] = value.detach().to("cpu").contiguous().clone()
    return tensors, sd["param_groups"]


def _unflatten_optimizer(tensors: dict[str, torch.Tensor], groups: list[dict]) -> dict:
    state: dict[int, dict] = {}
    for name, value in tensors.items():
        _, idx, slot = name.split(".", 2)
        state.setdefault(int(idx), {})[slot] = value
    param_groups = []
    for group in groups:
        group = dict(group)
        if "betas" in group:
            group["betas"] = tuple(group["betas"])
        param_groups.append(group)
    return {"state": state, "param_groups": param_groups}


def save_checkpoint(
    path: Path,
    role: Role,
    model: nn.Module,
    schedule: NoiseSchedule,
    config: TrainConfig,
    iteration: int,
    seed: int,
    ema: nn.Module | None = None,
    optimizer: torch.optim.Optimizer | None = None,
    scheduler=None,
    extra: dict | None = None,
) -> Path:
    """Write one role's weights (and optional EMA / optimizer state) to ``path``."""
    tensors = _contiguous(model.state_dict(), "model")
    if ema is not None:
        tensors.update(_contiguous(ema.state_dict(), "ema"))
    groups = None
    if optimizer is not None:
        optim_tensors, groups = _flatten_optimizer(optimizer)
        tensors.update(optim_tensors)
    sched_state = None
    if scheduler is not None:
        sched_state = {k: v for k, v in scheduler.state_dict().items() if k != "lr_lambdas"}
        sched_state["lr_lambdas"] = [None] * len(sched_state.get("base_lrs", []))

    header = CheckpointHeader(
        role=role,
        config=config.model_dump(mode="json"),
        schedule=schedule_to_dict(schedule),
        iteration=iteration,
        seed=seed,
        has_ema=ema is not None,
        optimizer=groups,
        scheduler=sched_state,
        extra=extra or {},
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_file(tensors, str(path), metadata={"header": dumps(header.model_dump(mode="json"), indent=False).decode()})
    return path


def load_checkpoint(
    path: Path,
    expected_role: Role | None = None,
    schedule: NoiseSchedule | None = None,
    device: str | torch.device = "cpu",
) -> Checkpoint:
    """
    Read a checkpoint.

    Raises:
        CheckpointError: missing file, unknown format version, unexpected
            role, or a schedule different from ``schedule``.
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        with safe_open(str(path), framework="pt", device=str(device)) as f:
            metadata = f.metadata() or {}
            tensors = {name: f.get_tensor(name) for name in f.keys()}
    except Exception as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e
    if "header" not in metadata:
        raise CheckpointError(f"{path} has no checkpoint header")
    header = CheckpointHeader(**loads(metadata["header"]))
    if header.format_version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: format version {header.format_version}, expected {FORMAT_VERSION}")
    if expected_role is not None and header.role != expected_role:
        raise CheckpointError(f"{path} holds a {header.role} checkpoint, expected {expected_role}")
    if schedule is not None and not schedules_match(schedule, schedule_from_dict(header.schedule)):
        raise CheckpointError(f"{path}: stored schedule {header.schedule} differs from the configured one")

    def section(prefix: str) -> dict[str, torch.Tensor]:
        return {k[len(prefix) + 1:]: v for k, v in tensors.items() if k.startswith(prefix + ".")}

    model_state = section("model")
    ema_state = section("ema") if header.has_ema else None
    optim_tensors = {k: v for k, v in tensors.items() if k.startswith("optim.")}
    optim_state = _unflatten_optimizer(optim_tensors, header.optimizer) if header.optimizer is not None else None
    return Checkpoint(header=header, model_state=model_state, ema_state=ema_state, optim_state=optim_state)
