"""Datasets: IDX files, an internal CSV format, synthetic blobs, label flips.

Example ids are stable handles: shuffling during training permutes an index
view, never the arrays here. Blob train/test splits keep disjoint ids drawn
from one pool, so a flipped or traced id is unambiguous across artifacts.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataFormatError

IDX_MAGIC_IMAGES = 2051
IDX_MAGIC_LABELS = 2049


@dataclass
class Dataset:
    features: np.ndarray  # (N, D) float64
    labels: np.ndarray  # (N,) int64
    class_count: int
    ids: np.ndarray  # (N,) int64, stable example ids

    def __len__(self) -> int:
        return len(self.labels)


def _read_idx(path: str, magic: int, ndim: int) -> np.ndarray:
    with open(path, "rb") as fh:
        buf = fh.read()
    header = 4 * (1 + ndim)
    if len(buf) < header:
        raise DataFormatError(
            f"{path}: file ends at byte offset {len(buf)}, expected a {header}-byte header"
        )
    got_magic = int.from_bytes(buf[0:4], "big")
    if got_magic != magic:
        raise DataFormatError(f"{path}: bad magic {got_magic} at byte offset 0, expected {magic}")
    dims = [int.from_bytes(buf[4 * (i + 1) : 4 * (i + 2)], "big") for i in range(ndim)]
    expected = int(np.prod(dims))
    if len(buf) != header + expected:
        raise DataFormatError(
            f"{path}: expected {expected} data bytes from byte offset {header}, "
            f"file ends at byte offset {len(buf)}"
        )
    return np.frombuffer(buf, dtype=np.uint8, offset=header).reshape(dims)


def load_idx(images_path: str, labels_path: str) -> Dataset:
    """Load an images/labels file pair; pixels are scaled to [0, 1]."""
    images = _read_idx(images_path, IDX_MAGIC_IMAGES, 3)
    labels = _read_idx(labels_path, IDX_MAGIC_LABELS, 1)
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"{images_path} holds {images.shape[0]} images but {labels_path} holds "
            f"{labels.shape[0]} labels"
        )
    n = images.shape[0]
    features = images.reshape(n, -1).astype(np.float64) / 255.0
    labels = labels.astype(np.int64)
    class_count = int(labels.max()) + 1 if n else 0
    return Dataset(features, labels, class_count, np.arange(n, dtype=np.int64))


def synth_blobs(n: int, classes: int, dim: int, spread: float, seed) -> tuple[Dataset, Dataset]:
    """Gaussian blobs around evenly spread class centers, split 80/20.

    Labels cycle round-robin through the classes, so both splits stay
    balanced up to remainder and spread=0.0 puts every example exactly on
    its center. Train takes ids [0, round(0.8 n)), test the rest.
    """
    if classes < 2:
        raise ConfigError(f"need at least 2 classes, got {classes}")
    if dim < 1:
        raise ConfigError(f"need at least 1 feature dimension, got {dim}")
    if n < classes:
        raise ConfigError(f"need at least one example per class, got n={n} for {classes} classes")
    if spread < 0:
        raise ConfigError(f"spread must be >= 0, got {spread}")
    centers = np.zeros((classes, dim))
    if dim >= classes:
        # regular simplex: one axis per class, all pairwise distances equal
        centers[np.arange(classes), np.arange(classes)] = 2.0
    elif dim == 1:
        centers[:, 0] = 2.0 * (np.arange(classes) - (classes - 1) / 2.0)
    else:
        angles = 2.0 * np.pi * np.arange(classes) / classes
        centers[:, 0] = 2.0 * np.cos(angles)
        centers[:, 1] = 2.0 * np.sin(angles)
    rng = np.random.default_rng(seed)
    labels = np.arange(n, dtype=np.int64) % classes
    features = centers[labels] + spread * rng.standard_normal((n, dim))
    ids = np.arange(n, dtype=np.int64)
    train_n = int(np.floor(0.8 * n + 0.5))
    train = Dataset(features[:train_n], labels[:train_n], classes, ids[:train_n])
    test = Dataset(features[train_n:], labels[train_n:], classes, ids[train_n:])
    return train, test


def uniform_flip(ds: Dataset, fraction: float, seed) -> tuple[Dataset, np.ndarray]:
    """Flip round(fraction * N) distinct labels, each to a uniform different class.

    Returns the corrupted dataset (labels copied, features shared) and the
    flipped example ids, sorted.
    """
    if not (0.0 <= fraction <= 1.0):
        raise ConfigError(f"flip fraction must be in [0, 1], got {fraction}")
    if ds.class_count < 2:
        raise ConfigError("cannot flip labels with fewer than 2 classes")
    n = len(ds)
    count = int(np.floor(fraction * n + 0.5))
    rng = np.random.default_rng(seed)
    positions = rng.choice(n, size=count, replace=False)
    labels = ds.labels.copy()
    for pos in positions:
        new = int(rng.integers(0, ds.class_count - 1))
        if new >= labels[pos]:
            new += 1
        labels[pos] = new
    flipped_ids = np.sort(ds.ids[positions])
    return Dataset(ds.features, labels, ds.class_count, ds.ids), flipped_ids


def write_csv(ds: Dataset, path: str) -> None:
    """Write `id,label,f0..f{D-1}` rows; floats keep full precision."""
    dim = ds.features.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"] + [f"f{i}" for i in range(dim)])
        for i in range(len(ds)):
            row = [int(ds.ids[i]), int(ds.labels[i])]
            row += [format(v, ".17g") for v in ds.features[i]]
            writer.writerow(row)


def read_csv(path: str) -> Dataset:
    """Read the internal CSV format; class count is inferred as max label + 1."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["id", "label"]:
            raise DataFormatError(f"{path}: expected header starting with id,label, got {header}")
        dim = len(header) - 2
        if [f"f{i}" for i in range(dim)] != header[2:]:
            raise DataFormatError(f"{path}: feature columns must be f0..f{dim - 1}, got {header[2:]}")
        ids, labels, rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2 + dim:
                raise DataFormatError(f"{path}: line {lineno} has {len(row)} fields, expected {2 + dim}")
            try:
                ids.append(int(row[0]))
                labels.append(int(row[1]))
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min() < 0:
        raise DataFormatError(f"{path}: negative label {labels.min()}")
    return Dataset(
        np.asarray(rows, dtype=np.float64),
        labels,
        int(labels.max()) + 1,
        np.asarray(ids, dtype=np.int64),
    )
