"""Pieces shared by the training and evaluation stages."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import torch
import torch.nn as nn

from ..data.dataset import PairedTileDataset
from ..data.manifest import load_manifest
from ..utils.config import DenoiserConfig, TrainConfig
from ..utils.errors import DataError
from ..utils.serialization import ResultsSerializer

TRAIN_LOG = "train_log.jsonl"


@dataclass
class RunResult:
    """What a training stage leaves behind."""
    output_dir: Path
    checkpoints: dict[str, Path]
    history: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def load_dataset(manifest_path: Path | None, denoiser: DenoiserConfig, split: str = "train") -> PairedTileDataset:
    """Load a manifest's tiles at the denoiser's tile size and channel counts."""
    if manifest_path is None:
        raise DataError(f"No {split} manifest configured (set data.{split}_manifest)")
    manifest = load_manifest(Path(manifest_path))
    return PairedTileDataset.from_manifest(
        manifest,
        tile_size=denoiser.tile_size,
        condition_channels=denoiser.condition_channels,
        target_channels=denoiser.target_channels,
    )


def prepare_output(config: TrainConfig, stage: str) -> ResultsSerializer:
    """Create ``<output_dir>/<stage>`` and echo the resolved config into it."""
    serializer = ResultsSerializer(Path(config.output_dir) / stage)
    serializer.save_result(config.model_dump(mode="json"), "config.json")
    return serializer


def start_log(serializer: ResultsSerializer, resumed_at: int) -> None:
    """Fresh runs start an empty log; resumed runs keep records up to ``resumed_at``."""
    if resumed_at > 0:
        serializer.truncate_log(resumed_at, TRAIN_LOG)
    else:
        (serializer.results_dir / TRAIN_LOG).write_bytes(b"")


def fingerprint(model: nn.Module) -> str:
    """SHA-256 over the raw bytes of every parameter and buffer, in state-dict order."""
    digest = hashlib.sha256()
    for name, tensor in model.state_dict().items():
        digest.update(name.encode())
        digest.update(tensor.detach().to("cpu").contiguous().numpy().tobytes())
    return digest.hexdigest()


def checkpoint_dir(serializer: ResultsSerializer, iteration: int) -> Path:
    return serializer.results_dir / "checkpoints" / f"iter_{iteration:07d}"


def probe_batch(dataset: PairedTileDataset, n: int, device: torch.device):
    """The first ``n`` tiles, unaugmented; used for grids and gap probes."""
    n = min(n, len(dataset))
    return next(dataset.batches(n)).to(device)
