"""
Loading IDX files and dealing label shards
==========================================

The loader reads the big-endian IDX format used by the MNIST distribution.
Here a tiny image/label pair is written to a temporary directory, loaded
back, and dealt to devices so that each holds only ``l`` labels.
"""
import struct
import tempfile
import warnings
from pathlib import Path

import numpy as np

from fedsched.datagen import PartitionSpec, load_idx_dataset, partition

warnings.simplefilter("ignore")  # shards:2 leaves some shards undealt

rng = np.random.default_rng(0)
images = rng.integers(0, 256, size=(120, 8, 8), dtype=np.uint8)
labels = (np.arange(120) % 6).astype(np.uint8)

with tempfile.TemporaryDirectory() as tmp:
    img_path, lab_path = Path(tmp) / "images-idx3-ubyte", Path(tmp) / "labels-idx1-ubyte"
    img_path.write_bytes(struct.pack(">IIII", 0x803, 120, 8, 8) + images.tobytes())
    lab_path.write_bytes(struct.pack(">II", 0x801, 120) + labels.tobytes())
    data = load_idx_dataset(img_path, lab_path)

print("features", data.features.shape, "range", data.features.min(), data.features.max())
for spec in ("iid", "shards:1", "shards:2"):
    parts = partition(data, 6, PartitionSpec.parse(spec), rng)
    print(f"{spec:9s}", [sorted(set(p.labels.tolist())) for p in parts])
