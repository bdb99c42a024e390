import struct
import warnings

import numpy as np
import pytest

from fedsched.datagen import (IdxParseError, PartitionSpec, least_squares_optimum, load_idx,
                              load_idx_dataset, partition, partition_indices,
                              synth_classification, synth_regression)


def write_idx_images(path, images):
    n, r, c = images.shape
    path.write_bytes(struct.pack(">IIII", 0x803, n, r, c) + images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    path.write_bytes(struct.pack(">II", 0x801, len(labels)) + labels.astype(np.uint8).tobytes())


def test_idx_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    imgs = rng.integers(0, 256, size=(7, 3, 4))
    labels = rng.integers(0, 10, size=7)
    write_idx_images(tmp_path / "img", imgs)
    write_idx_labels(tmp_path / "lab", labels)
    ds = load_idx_dataset(tmp_path / "img", tmp_path / "lab")
    assert ds.features.shape == (7, 12)
    np.testing.assert_allclose(ds.features, imgs.reshape(7, 12) / 255.0)
    np.testing.assert_array_equal(ds.labels, labels)


def test_idx_errors(tmp_path):
    bad = tmp_path / "bad"
    bad.write_bytes(b"\x00\x00")
    with pytest.raises(IdxParseError):
        load_idx(bad)
    bad.write_bytes(struct.pack(">I", 0x0D03) + b"\x00" * 16)
    with pytest.raises(IdxParseError, match="magic"):
        load_idx(bad)
    bad.write_bytes(struct.pack(">III", 0x803, 2, 2))
    with pytest.raises(IdxParseError, match="header"):
        load_idx(bad)
    bad.write_bytes(struct.pack(">II", 0x801, 5) + b"\x01\x02")
    with pytest.raises(IdxParseError, match="expected 5") as err:
        load_idx(bad)
    assert err.value.offset == 10


def test_synth_classification_balanced_and_shared_means():
    rng = np.random.default_rng(0)
    means = rng.normal(size=(4, 3))
    ds = synth_classification(rng, 400, 3, 4, means=means)
    assert np.all(np.bincount(ds.labels) == 100)
    for c in range(4):
        assert np.allclose(ds.features[ds.labels == c].mean(axis=0), means[c], atol=0.3)


def test_least_squares_optimum():
    rng = np.random.default_rng(1)
    ds = synth_regression(rng, 500, 10, noise_std=0.0)
    w, loss = least_squares_optimum(ds)
    np.testing.assert_allclose(w, ds.w_true, atol=1e-10)
    assert loss < 1e-20


def test_partition_spec_parse():
    assert PartitionSpec.parse("iid") == PartitionSpec("iid")
    assert PartitionSpec.parse("shards:3") == PartitionSpec("shards", 3)
    assert str(PartitionSpec("shards", 2)) == "shards:2"
    with pytest.raises(ValueError):
        PartitionSpec.parse("dirichlet")


def test_iid_partition_drops_remainder():
    labels = np.zeros(103, dtype=int)
    with pytest.warns(UserWarning):
        parts = partition_indices(labels, 10, PartitionSpec("iid"), np.random.default_rng(0))
    assert all(len(p) == 10 for p in parts)
    assert len(np.unique(np.concatenate(parts))) == 100


def test_shards_uneven_class_pools_are_trimmed():
    labels = np.repeat(np.arange(3), [31, 30, 29])
    with pytest.warns(UserWarning):
        parts = partition_indices(labels, 6, PartitionSpec("shards", 1), np.random.default_rng(0))
    sizes = {len(p) for p in parts}
    assert len(sizes) == 1
    for p in parts:
        assert len(np.unique(labels[p])) == 1


def test_shards_errors():
    labels = np.repeat(np.arange(3), 10)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError, match="classes"):
        partition_indices(labels, 2, PartitionSpec("shards", 4), rng)
    with pytest.raises(ValueError, match="shards"):
        partition_indices(labels, 7, PartitionSpec("shards", 1), rng)


def test_partition_returns_datasets():
    rng = np.random.default_rng(0)
    ds = synth_classification(rng, 200, 2, 5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parts = partition(ds, 10, PartitionSpec("shards", 1), rng)
    assert sum(len(p) for p in parts) == 200
