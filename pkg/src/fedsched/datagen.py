"""Datasets, IID / label-shard partitioning, and IDX file loading."""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    w_true: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels must have the same number of rows")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.w_true)


@dataclass(frozen=True)
class PartitionSpec:
    """``mode`` is ``"iid"`` or ``"shards"``; ``l`` is shards per device."""

    mode: str = "iid"
    l: int = 1

    def __post_init__(self):
        if self.mode not in ("iid", "shards"):
            raise ValueError(f"unknown partition mode {self.mode!r}")
        if self.l < 1:
            raise ValueError("l must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "PartitionSpec":
        """``"iid"`` or ``"shards:<l>"``."""
        text = text.strip().lower()
        if text == "iid":
            return cls("iid")
        if text.startswith("shards:"):
            return cls("shards", int(text.split(":", 1)[1]))
        raise ValueError(f"bad partition spec {text!r}; use 'iid' or 'shards:<l>'")

    def __str__(self):
        return "iid" if self.mode == "iid" else f"shards:{self.l}"


def synth_classification(rng: np.random.Generator, n: int, dims: int, classes: int,
                         class_sep: float = 1.0, means: np.ndarray | None = None) -> Dataset:
    """Gaussian blobs: unit-variance noise around ``N(0, class_sep^2 I)`` class means.

    Labels are balanced. Pass the same ``means`` to draw a matching test set.
    """
    if n < classes:
        raise ValueError("need n >= classes")
    if means is None:
        means = rng.normal(0.0, class_sep, size=(classes, dims))
    elif np.shape(means) != (classes, dims):
        raise ValueError(f"means must have shape ({classes}, {dims})")
    labels = rng.permutation(np.arange(n) % classes)
    X = means[labels] + rng.normal(size=(n, dims))
    return Dataset(X, labels.astype(np.int64))


def synth_regression(rng: np.random.Generator, n: int, dims: int, w_true=None,
                     noise_std: float = 0.1) -> Dataset:
    """``y = w_true . x + noise`` with standard normal features."""
    if w_true is None:
        w_true = rng.normal(size=dims)
    w_true = np.asarray(w_true, dtype=float)
    X = rng.normal(size=(n, dims))
    y = X @ w_true + noise_std * rng.normal(size=n)
    return Dataset(X, y, w_true)


def least_squares_optimum(data: Dataset) -> tuple[np.ndarray, float]:
    """Normal-equations solution and its mean ``0.5 * residual^2`` loss."""
    X, y = data.features, data.labels
    w = np.linalg.solve(X.T @ X, X.T @ y)
    r = X @ w - y
    return w, 0.5 * float(np.mean(r * r))


def partition_indices(labels: np.ndarray, M: int, spec: PartitionSpec,
                      rng: np.random.Generator) -> list[np.ndarray]:
    """Disjoint, equal-sized index sets, one per device.

    ``shards``: each class pool is shuffled and cut into ``2l`` shards, and
    device ``j`` receives ``l`` consecutive shards from the class-interleaved
    shard list, so its ``l`` shards carry ``l`` different labels. If shard
    sizes make devices unequal, every device is trimmed to the smallest size.
    """
    n = len(labels)
    if M < 1:
        raise ValueError("M must be >= 1")
    if spec.mode == "iid":
        usable = (n // M) * M
        if usable != n:
            warnings.warn(f"dropping {n - usable} samples so {M} devices get equal shares")
        perm = rng.permutation(n)[:usable]
        return [np.sort(part) for part in np.split(perm, M)]

    classes = np.unique(labels)
    n_cls, l = len(classes), spec.l
    if l > n_cls:
        raise ValueError(f"l={l} distinct labels per device but only {n_cls} classes")
    if M * l > n_cls * 2 * l:
        raise ValueError(f"M*l={M * l} shards requested but only {n_cls * 2 * l} exist")
    shards_by_class = []
    for c in classes:
        pool = rng.permutation(np.flatnonzero(labels == c))
        shards_by_class.append(np.array_split(pool, 2 * l))
    # interleave: position t holds a shard of class t mod n_cls
    ordered = [shards_by_class[c][r] for r in range(2 * l) for c in range(n_cls)]
    parts = [np.concatenate(ordered[j * l:(j + 1) * l]) for j in range(M)]
    size = min(len(p) for p in parts)
    if any(len(p) != size for p in parts) or M * l < len(ordered):
        dropped = n - M * size
        warnings.warn(f"dropping {dropped} samples so {M} devices get equal shares")
    return [np.sort(rng.permutation(p)[:size]) for p in parts]


def partition(dataset: Dataset, M: int, spec: PartitionSpec,
              rng: np.random.Generator) -> list[Dataset]:
    return [dataset.subset(idx) for idx in partition_indices(dataset.labels, M, spec, rng)]


class IdxParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def load_idx(path) -> np.ndarray:
    """Parse an unsigned-byte IDX file.

    Image files (3-d) come back as float rows scaled to ``[0, 1]``, one
    flattened image per row; label files (1-d) as an int64 vector.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise IdxParseError("file too short for an IDX magic number", len(raw))
    (magic,) = struct.unpack(">I", raw[:4])
    if magic == IDX_IMAGES_MAGIC:
        ndim = 3
    elif magic == IDX_LABELS_MAGIC:
        ndim = 1
    else:
        raise IdxParseError(f"unsupported IDX magic 0x{magic:08x}", 0)
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise IdxParseError("truncated IDX header", len(raw))
    dims = struct.unpack(f">{ndim}I", raw[4:header_end])
    count = int(np.prod(dims, dtype=np.int64))
    if len(raw) - header_end < count:
        raise IdxParseError(
            f"expected {count} data bytes for shape {dims}, found {len(raw) - header_end}",
            len(raw))
    data = np.frombuffer(raw, dtype=np.uint8, count=count, offset=header_end)
    if ndim == 1:
        return data.astype(np.int64)
    return data.reshape(dims[0], dims[1] * dims[2]).astype(float) / 255.0


def load_idx_dataset(images_path, labels_path) -> Dataset:
    X = load_idx(images_path)
    y = load_idx(labels_path)
    if X.ndim != 2 or y.ndim != 1:
        raise ValueError("expected an image file and a label file")
    return Dataset(X, y)
