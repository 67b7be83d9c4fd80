"""In-memory paired-tile dataset and deterministic batch selection."""
from __future__ import annotations

from dataclasses import dataclass

import torch

from ..utils.errors import DataError
from ..utils.logging import data_logger
from ..utils.seeding import make_generator
from .augment import augment as augment_pair
from .manifest import DatasetManifest
from .tiles import PairedTile, load_pair


@dataclass
class TileBatch:
    """Stacked tiles: cond (B, Cc, H, W), target (B, Ct, H, W)."""
    cond: torch.Tensor
    target: torch.Tensor
    ids: list[str]

    def __len__(self) -> int:
        return self.target.shape[0]

    def to(self, device: torch.device | str, dtype: torch.dtype | None = None) -> "TileBatch":
        return TileBatch(
            cond=self.cond.to(device=device, dtype=dtype or self.cond.dtype),
            target=self.target.to(device=device, dtype=dtype or self.target.dtype),
            ids=list(self.ids),
        )

    def slice(self, start: int, stop: int) -> "TileBatch":
        return TileBatch(self.cond[start:stop], self.target[start:stop], self.ids[start:stop])


def stack_tiles(tiles: list[PairedTile]) -> TileBatch:
    if not tiles:
        raise DataError("cannot stack an empty list of tiles")
    return TileBatch(
        cond=torch.stack([t.cond for t in tiles]),
        target=torch.stack([t.target for t in tiles]),
        ids=[t.id for t in tiles],
    )


class PairedTileDataset:
    """All tiles of one split, loaded once into memory."""

    def __init__(self, tiles: list[PairedTile], split: str = "train"):
        self.tiles = tiles
        self.split = split

    @classmethod
    def from_manifest(
        cls,
        manifest: DatasetManifest,
        tile_size: int | None = None,
        condition_channels: int = 1,
        target_channels: int = 3,
    ) -> "PairedTileDataset":
        """
        Load every pair in ``manifest``, resized to ``tile_size`` (default the manifest's).

        Raises:
            DataError: the manifest is empty or a file is missing or unreadable.
        """
        if len(manifest) == 0:
            raise DataError(f"Manifest for split '{manifest.split}' is empty")
        manifest.check_files()
        size = tile_size or manifest.tile_size
        tiles = [
            load_pair(
                *manifest.resolve(entry),
                tile_size=size,
                tile_id=entry.id,
                condition_channels=condition_channels,
                target_channels=target_channels,
                meta={"split": manifest.split},
            )
            for entry in manifest.pairs
        ]
        data_logger().debug("dataset_loaded", split=manifest.split, n_tiles=len(tiles), tile_size=size)
        return cls(tiles, split=manifest.split)

    def __len__(self) -> int:
        return len(self.tiles)

    def __getitem__(self, idx: int) -> PairedTile:
        return self.tiles[idx]

    def batches(self, batch_size: int):
        """Fixed-order batches covering every tile once (evaluation)."""
        for start in range(0, len(self), batch_size):
            yield stack_tiles(self.tiles[start:start + batch_size])


def batch_for_iteration(
    dataset: PairedTileDataset,
    batch_size: int,
    seed: int,
    iteration: int,
    augment: bool = True,
    stream: int = 0,
) -> TileBatch:
    """
    Training batch for one iteration.

    Indices (drawn with replacement) and dihedral transforms depend only on
    (seed, iteration, stream), so a resumed run replays the same batches.
    """
    if len(dataset) == 0:
        raise DataError("training dataset is empty")
    gen = make_generator(seed, iteration, stream)
    indices = torch.randint(0, len(dataset), (batch_size,), generator=gen).tolist()
    tiles = [dataset[i] for i in indices]
    if augment:
        tiles = [augment_pair(tile, gen) for tile in tiles]
    return stack_tiles(tiles)
