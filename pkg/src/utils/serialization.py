"""JSON serialization of results, manifests, configs and training logs."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Any

import numpy as np
import orjson


def ensure_string_keys(obj: Any) -> Any:
    """Recursively convert all dict keys to strings."""
    if isinstance(obj, dict):
        return {str(k): ensure_string_keys(v) for k, v in obj.items()}
    elif isinstance(obj, list):
        return [ensure_string_keys(item) for item in obj]
    elif isinstance(obj, tuple):
        return tuple(ensure_string_keys(item) for item in obj)
    else:
        return obj


def _default(obj: Any) -> Any:
    """orjson fallback for types it does not know."""
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if hasattr(obj, "model_dump"):
        return obj.model_dump(mode="json")
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"Type {type(obj).__name__} is not JSON serializable")


def _sanitize(obj: Any) -> Any:
    """Replace non-finite floats with strings; JSON has no Infinity."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def dumps(obj: Any, indent: bool = True) -> bytes:
    """Stable JSON bytes: sorted keys, string keys, non-finite floats as strings."""
    option = orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
    if indent:
        option |= orjson.OPT_INDENT_2
    return orjson.dumps(_sanitize(ensure_string_keys(obj)), default=_default, option=option)


def loads(data: bytes | str) -> Any:
    return orjson.loads(data)


def save_json(obj: Any, filepath: Path) -> Path:
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "wb") as f:
        f.write(dumps(obj))
    return filepath


def load_json(filepath: Path) -> Any:
    with open(filepath, "rb") as f:
        return orjson.loads(f.read())


class ResultsSerializer:
    """Serialize and save run artifacts under one directory."""

    def __init__(self, results_dir: Path = Path("runs")):
        self.results_dir = Path(results_dir)
        self.results_dir.mkdir(parents=True, exist_ok=True)

    def save_result(self, data: Any, filename: str) -> Path:
        """Save one JSON document."""
        return save_json(data, self.results_dir / filename)

    def append_to_log(self, record: dict, log_file: str = "train_log.jsonl"):
        """Append one record to a JSON Lines log file."""
        filepath = self.results_dir / log_file
        with open(filepath, "ab") as f:
            f.write(dumps(record, indent=False))
            f.write(b"\n")

    def read_log(self, log_file: str = "train_log.jsonl") -> list[dict]:
        """Read every record of a JSON Lines log file."""
        filepath = self.results_dir / log_file
        if not filepath.exists():
            return []
        with open(filepath, "rb") as f:
            return [orjson.loads(line) for line in f if line.strip()]

    def truncate_log(self, after_iteration: int, log_file: str = "train_log.jsonl"):
        """Drop records past ``after_iteration`` (used when resuming)."""
        kept = [r for r in self.read_log(log_file) if r.get("iteration", -1) <= after_iteration]
        filepath = self.results_dir / log_file
        with open(filepath, "wb") as f:
            for record in kept:
                f.write(dumps(record, indent=False))
                f.write(b"\n")
