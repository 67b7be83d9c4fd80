"""Stage ledger for multi-stage pipeline runs.

Each stage (toy data, teacher, distillation, evaluation, benchmark) gets a
record with the checkpoints it read, the artifacts it wrote and its headline
metrics. Lifecycle events go to ``stages.jsonl``; ``save_summary`` writes the
whole ledger so a run can be traced from data to latency table.
"""
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Iterator

from .logging import get_logger
from .serialization import ResultsSerializer

logger = get_logger(__name__)


@dataclass
class StageRecord:
    """One pipeline stage and what flowed through it."""
    name: str
    role: str
    parameters: dict = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    started: datetime | None = None
    finished: datetime | None = None
    status: str = "pending"  # pending, running, completed, failed
    error: str = ""

    @property
    def duration_seconds(self) -> float | None:
        if self.started and self.finished:
            return (self.finished - self.started).total_seconds()
        return None

    def add_outputs(self, artifacts: dict[str, Path]):
        self.outputs.update({k: str(v) for k, v in artifacts.items()})

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "role": self.role,
            "parameters": self.parameters,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "metrics": self.metrics,
            "started": self.started.isoformat() if self.started else None,
            "finished": self.finished.isoformat() if self.finished else None,
            "duration_seconds": self.duration_seconds,
            "status": self.status,
            "error": self.error,
        }


class ExperimentTracker:
    """Ledger of the stages of one pipeline run."""

    def __init__(self, log_dir: Path = Path("runs/logs")):
        self.serializer = ResultsSerializer(log_dir)
        self.stages: list[StageRecord] = []

    @contextmanager
    def stage(
        self,
        name: str,
        role: str,
        inputs: dict[str, Path] | None = None,
        **params: Any,
    ) -> Iterator[StageRecord]:
        """Run a block as a named stage.

        The record is marked completed when the block exits normally and
        failed (with the exception text) when it raises; the exception
        propagates either way.
        """
        if any(s.name == name for s in self.stages):
            raise ValueError(f"Stage '{name}' already recorded")
        record = StageRecord(
            name=name,
            role=role,
            parameters=params,
            inputs={k: str(v) for k, v in (inputs or {}).items()},
        )
        self.stages.append(record)
        record.started = datetime.now()
        record.status = "running"
        self._log(record, "started")
        try:
            yield record
        except Exception as e:
            record.finished = datetime.now()
            record.status = "failed"
            record.error = f"{type(e).__name__}: {e}"
            self._log(record, "failed")
            raise
        record.finished = datetime.now()
        record.status = "completed"
        self._log(record, "completed")

    def get(self, name: str) -> StageRecord:
        for record in self.stages:
            if record.name == name:
                return record
        raise KeyError(f"Stage '{name}' not found")

    def _log(self, record: StageRecord, event: str):
        logger.info("stage_" + event, stage=record.name, role=record.role, status=record.status)
        self.serializer.append_to_log({"event": event, **record.to_dict()}, "stages.jsonl")

    def save_summary(self, filename: str = "pipeline_summary.json") -> Path:
        """Write every stage record, in run order."""
        return self.serializer.save_result([s.to_dict() for s in self.stages], filename)
