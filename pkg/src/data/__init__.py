"""Paired-tile data: loading, augmentation, manifests and the toy generator."""
from .tiles import (
    PairedTile,
    concat_condition,
    from_unit_range,
    load_condition,
    load_pair,
    save_png,
    to_uint8,
    to_unit_range,
)
from .augment import apply_dihedral, augment, dihedral, inverse_dihedral
from .manifest import DatasetManifest, PairEntry, load_manifest, save_manifest
from .generators import make_toy_dataset, make_toy_splits, sample_speckle
from .dataset import PairedTileDataset, TileBatch, batch_for_iteration, stack_tiles

__all__ = [
    "PairedTile", "concat_condition", "from_unit_range", "load_condition", "load_pair",
    "save_png", "to_uint8", "to_unit_range",
    "apply_dihedral", "augment", "dihedral", "inverse_dihedral",
    "DatasetManifest", "PairEntry", "load_manifest", "save_manifest",
    "make_toy_dataset", "make_toy_splits", "sample_speckle",
    "PairedTileDataset", "TileBatch", "batch_for_iteration", "stack_tiles",
]
