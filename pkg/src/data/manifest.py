"""Dataset manifests: which (cond, target) files make up a split."""
from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, model_validator

from ..utils.errors import DataError
from ..utils.serialization import load_json, save_json


class PairEntry(BaseModel):
    cond: str
    target: str
    id: str


class DatasetManifest(BaseModel):
    """
    Manifest file layout: ``{root, tile_size, split, pairs: [{cond, target, id}]}``.

    Paths in ``pairs`` are relative to ``root``.
    """
    root: Path
    split: Literal["train", "val", "test"]
    tile_size: int = Field(ge=1)
    pairs: list[PairEntry]

    @model_validator(mode="after")
    def _unique_ids(self) -> "DatasetManifest":
        ids = [p.id for p in self.pairs]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate tile ids in manifest")
        return self

    def __len__(self) -> int:
        return len(self.pairs)

    def resolve(self, entry: PairEntry) -> tuple[Path, Path]:
        return self.root / entry.cond, self.root / entry.target

    def check_files(self) -> None:
        """
        Raises:
            DataError: a referenced file does not exist.
        """
        for entry in self.pairs:
            for path in self.resolve(entry):
                if not path.exists():
                    raise DataError(f"Manifest entry {entry.id}: missing file {path}")


def save_manifest(manifest: DatasetManifest, path: Path) -> Path:
    try:
        return save_json(manifest.model_dump(mode="json"), path)
    except OSError as e:
        raise DataError(f"Cannot write manifest {path}: {e}") from e


def load_manifest(path: Path) -> DatasetManifest:
    """
    Read a manifest. A relative ``root`` is resolved against the manifest's directory.

    Raises:
        DataError: missing or malformed manifest.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Manifest not found: {path}")
    try:
        data = load_json(path)
        manifest = DatasetManifest(**data)
    except Exception as e:
        raise DataError(f"Malformed manifest {path}: {e}") from e
    if not manifest.root.is_absolute():
        manifest.root = (path.parent / manifest.root).resolve()
    return manifest
