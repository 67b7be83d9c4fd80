"""Tests for tile loading, augmentation, manifests and the toy generator."""
import numpy as np
import pytest
import torch
from PIL import Image

from src.data.augment import N_DIHEDRAL, apply_dihedral, augment, dihedral, draw_dihedral, inverse_dihedral
from src.data.dataset import PairedTileDataset, batch_for_iteration, stack_tiles
from src.data.generators import luminance, make_toy_dataset, sample_speckle, speckled_condition
from src.data.manifest import DatasetManifest, PairEntry, load_manifest, save_manifest
from src.data.tiles import (
    PairedTile,
    concat_condition,
    load_condition,
    load_pair,
    load_target,
    save_png,
    to_uint8,
)
from src.utils.errors import DataError, InvalidRangeError, ShapeMismatchError, ValidationError
from src.utils.serialization import save_json


def _write(path, array):
    Image.fromarray(array).save(path)
    return path


def _tile(size=4, seed=0):
    gen = torch.Generator().manual_seed(seed)
    target = torch.rand(3, size, size, generator=gen) * 2 - 1
    return PairedTile(cond=target[:1].clone(), target=target, id="tile")


class TestTileLoading:
    """Test image loading and normalization."""

    def test_eight_bit_midpoint(self, tmp_path):
        """An 8-bit value of 128 maps to 2·128/255 − 1 ≈ 0.00392."""
        path = _write(tmp_path / "c.png", np.full((4, 4), 128, dtype=np.uint8))

        cond = load_condition(path, tile_size=None)

        assert cond.shape == (1, 4, 4)
        assert float(cond[0, 0, 0]) == pytest.approx(2 * 128 / 255 - 1, abs=1e-6)

    def test_sixteen_bit_range(self, tmp_path):
        arr = np.zeros((4, 4), dtype=np.uint16)
        arr[0, 0] = 65535
        path = _write(tmp_path / "c16.png", arr)

        cond = load_condition(path, tile_size=None)

        assert float(cond[0, 0, 0]) == pytest.approx(1.0)
        assert float(cond[0, 1, 1]) == pytest.approx(-1.0)

    def test_color_condition_reduced_to_luminance(self, tmp_path):
        path = _write(tmp_path / "rgb.png", np.full((4, 4, 3), 200, dtype=np.uint8))

        assert load_condition(path, tile_size=None).shape == (1, 4, 4)

    def test_grayscale_target_rejected(self, tmp_path):
        path = _write(tmp_path / "gray.png", np.zeros((4, 4), dtype=np.uint8))

        with pytest.raises(DataError):
            load_target(path, tile_size=None)

    def test_unreadable_file(self, tmp_path):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"not an image")

        with pytest.raises(DataError):
            load_condition(bad, tile_size=None)

    def test_pair_resized_to_tile(self, tmp_path):
        cond = _write(tmp_path / "c.png", np.zeros((16, 16), dtype=np.uint8))
        target = _write(tmp_path / "t.png", np.zeros((16, 16, 3), dtype=np.uint8))

        pair = load_pair(cond, target, tile_size=8)

        assert pair.cond.shape == (1, 8, 8)
        assert pair.target.shape == (3, 8, 8)
        assert pair.id == "t"

    def test_misaligned_native_pair(self, tmp_path):
        cond = _write(tmp_path / "c.png", np.zeros((16, 16), dtype=np.uint8))
        target = _write(tmp_path / "t.png", np.zeros((8, 8, 3), dtype=np.uint8))

        with pytest.raises(ShapeMismatchError):
            load_pair(cond, target, tile_size=None)

    def test_values_in_range(self, tmp_path):
        path = _write(tmp_path / "t.png", np.random.default_rng(0).integers(0, 256, (8, 8, 3), dtype=np.uint8))
        target = load_target(path, tile_size=None)

        assert target.min() >= -1.0 and target.max() <= 1.0

    def test_png_round_trip(self, tmp_path):
        x = torch.linspace(-1, 1, 48).reshape(3, 4, 4)
        path = save_png(x, tmp_path / "out" / "x.png")

        assert np.array_equal(np.asarray(Image.open(path)), to_uint8(x))

    def test_condition_stacked_after_target(self):
        """Channel 3 of the network input is condition channel 0."""
        x = torch.zeros(2, 3, 4, 4)
        cond = torch.ones(2, 1, 4, 4)

        stacked = concat_condition(x, cond)

        assert stacked.shape == (2, 4, 4, 4)
        assert torch.equal(stacked[:, 3], cond[:, 0])


class TestAugmentation:
    """Test the synchronized dihedral augmentation."""

    def test_all_eight_elements_distinct(self):
        x = torch.arange(16.0).reshape(1, 4, 4)

        images = {tuple(dihedral(x, k).flatten().tolist()) for k in range(N_DIHEDRAL)}

        assert len(images) == N_DIHEDRAL

    @pytest.mark.parametrize("k", range(N_DIHEDRAL))
    def test_inverse(self, k):
        x = torch.arange(16.0).reshape(1, 4, 4)

        assert torch.equal(inverse_dihedral(dihedral(x, k), k), x)

    @pytest.mark.parametrize("k", range(N_DIHEDRAL))
    def test_condition_and_target_stay_aligned(self, k):
        pair = apply_dihedral(_tile(), k)

        assert torch.equal(pair.cond, pair.target[:1])
        assert pair.meta["dihedral"] == k

    def test_uniform_over_configurations(self):
        """Each of the 8 configurations occurs with frequency 1/8 ± 0.02."""
        gen = torch.Generator().manual_seed(0)
        counts = np.bincount([draw_dihedral(gen) for _ in range(10_000)], minlength=N_DIHEDRAL)

        assert np.all(np.abs(counts / 10_000 - 1 / 8) < 0.02)

    def test_value_range_preserved(self):
        pair = augment(_tile(), torch.Generator().manual_seed(3))

        assert pair.target.min() >= -1 and pair.target.max() <= 1

    def test_quarter_turn_needs_square_tile(self):
        with pytest.raises(ValidationError):
            dihedral(torch.zeros(1, 4, 6), 1)
        assert dihedral(torch.zeros(1, 4, 6), 2).shape == (1, 4, 6)

    def test_invalid_index(self):
        with pytest.raises(ValidationError):
            dihedral(torch.zeros(1, 4, 4), 8)


class TestToyGenerator:
    """Test the procedural toy dataset."""

    def test_speckle_statistics(self):
        """Unit-mean gamma speckle with 4 looks has variance 0.25."""
        speckle = sample_speckle(np.random.default_rng(0), (100_000,), looks=4.0)

        assert abs(speckle.mean() - 1.0) < 0.02
        assert speckle.var() == pytest.approx(0.25, rel=0.10)

    def test_condition_tracks_luminance(self):
        """A dark/bright scene stays visible through the speckle."""
        rgb = np.zeros((32, 32, 3))
        rgb[:, 16:] = 1.0

        cond = speckled_condition(rgb, np.random.default_rng(1))

        assert np.corrcoef(cond.ravel(), luminance(rgb).ravel())[0, 1] > 0.5
        assert cond.min() == 0.0 and cond.max() == 1.0

    def test_deterministic(self, tmp_path):
        a = make_toy_dataset(tmp_path / "a", n_pairs=3, tile_size=16, seed=5)
        b = make_toy_dataset(tmp_path / "b", n_pairs=3, tile_size=16, seed=5)

        for pa, pb in zip(a.pairs, b.pairs):
            for rel in (pa.cond, pa.target):
                assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
            assert pa.id == pb.id

    def test_splits_differ(self, toy_data):
        train = load_manifest(toy_data / "manifest_train.json")
        test = load_manifest(toy_data / "manifest_test.json")

        assert len(train) == 8 and len(test) == 4
        assert (train.root / train.pairs[0].target).read_bytes() != (test.root / test.pairs[0].target).read_bytes()

    def test_invalid_size(self, tmp_path):
        with pytest.raises(InvalidRangeError):
            make_toy_dataset(tmp_path, n_pairs=0, tile_size=16, seed=0)


class TestManifest:
    """Test manifest loading and validation."""

    def test_round_trip(self, tmp_path):
        manifest = DatasetManifest(
            root=".", split="test", tile_size=8, pairs=[PairEntry(cond="c.png", target="t.png", id="a")]
        )
        save_manifest(manifest, tmp_path / "m.json")

        loaded = load_manifest(tmp_path / "m.json")

        assert loaded.root == tmp_path.resolve()
        assert loaded.pairs == manifest.pairs

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DataError):
            load_manifest(tmp_path / "nope.json")

    def test_duplicate_ids(self, tmp_path):
        entry = {"cond": "c.png", "target": "t.png", "id": "a"}
        save_json({"root": ".", "split": "train", "tile_size": 8, "pairs": [entry, entry]}, tmp_path / "m.json")

        with pytest.raises(DataError):
            load_manifest(tmp_path / "m.json")

    def test_missing_file_detected(self, tmp_path):
        manifest = DatasetManifest(
            root=tmp_path, split="train", tile_size=8, pairs=[PairEntry(cond="c.png", target="t.png", id="a")]
        )

        with pytest.raises(DataError):
            PairedTileDataset.from_manifest(manifest)

    def test_empty_manifest(self, tmp_path):
        manifest = DatasetManifest(root=tmp_path, split="train", tile_size=8, pairs=[])

        with pytest.raises(DataError):
            PairedTileDataset.from_manifest(manifest)


class TestDataset:
    """Test the in-memory dataset and batch selection."""

    @pytest.fixture
    def dataset(self, toy_data):
        return PairedTileDataset.from_manifest(load_manifest(toy_data / "manifest_train.json"))

    def test_loaded_shapes(self, dataset):
        assert len(dataset) == 8
        assert dataset[0].cond.shape == (1, 16, 16)
        assert dataset[0].target.shape == (3, 16, 16)

    def test_batch_depends_only_on_keys(self, dataset):
        a = batch_for_iteration(dataset, 4, seed=0, iteration=3)
        b = batch_for_iteration(dataset, 4, seed=0, iteration=3)
        c = batch_for_iteration(dataset, 4, seed=0, iteration=4)

        assert torch.equal(a.target, b.target) and a.ids == b.ids
        assert not torch.equal(a.target, c.target)

    def test_evaluation_batches_cover_split_in_order(self, dataset):
        ids = [tid for batch in dataset.batches(3) for tid in batch.ids]

        assert ids == [tile.id for tile in dataset.tiles]

    def test_stack_empty(self):
        with pytest.raises(DataError):
            stack_tiles([])
