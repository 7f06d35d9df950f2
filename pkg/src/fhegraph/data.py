"""Datasets: CSV ingestion and the synthetic stand-ins used for desk-scale runs."""
from __future__ import annotations

import csv
import gzip
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ParseError

TRAIN, VAL, TEST = "train", "val", "test"


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    split: np.ndarray
    task: str = "classification"

    def __post_init__(self):
        if len(self.features) != len(self.labels) or len(self.labels) != len(self.split):
            raise ValueError("features, labels and split tags differ in length")

    def __len__(self):
        return len(self.labels)

    def subset(self, tag: str) -> "Dataset":
        mask = self.split == tag
        return Dataset(self.features[mask], self.labels[mask], self.split[mask], self.task)

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.task == "classification" and len(self) else 0


def split_tags(n: int, test_size: Union[int, float] = 0.2, val_size: Union[int, float] = 0,
               seed: int = 0) -> np.ndarray:
    def count(size):
        return int(round(size * n)) if isinstance(size, float) else int(size)

    n_test, n_val = count(test_size), count(val_size)
    if n_test + n_val > n:
        raise ValueError(f"cannot take {n_test} test + {n_val} val rows from {n}")
    order = np.random.default_rng(seed).permutation(n)
    tags = np.full(n, TRAIN, dtype=object)
    tags[order[:n_test]] = TEST
    tags[order[n_test:n_test + n_val]] = VAL
    return tags


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", newline="")
    return open(path, newline="")


def load_csv(path, task: str = "classification", shape: Optional[Sequence[int]] = (28, 28),
             test_size: Union[int, float] = 0.2, val_size: Union[int, float] = 0,
             seed: int = 0, limit: Optional[int] = None) -> Dataset:
    """Read ``label,features...`` rows (``target,features...`` for regression).

    Classification pixels are divided by 255; regression features are
    min-max scaled per column.  Features are reshaped to ``shape`` when given.
    A header row is skipped when none of its cells parse as numbers.
    """
    if task not in ("classification", "regression"):
        raise ValueError(f"unknown task {task!r}")
    rows = []
    width = None
    with _open(path) as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values = [float(c) for c in row]
            except ValueError:
                if lineno == 1 and not any(_is_number(c) for c in row):
                    continue
                bad = next(c for c in row if not _is_number(c))
                raise ParseError(f"{path}:{lineno}: non-numeric cell {bad!r}", row=lineno) from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ParseError(f"{path}:{lineno}: expected {width} cells, got {len(values)}", row=lineno)
            rows.append(values)
            if limit is not None and len(rows) >= limit:
                break
    if not rows:
        raise ParseError(f"{path}: no data rows", row=0)
    table = np.array(rows)
    target, features = table[:, 0], table[:, 1:]
    if task == "classification":
        labels = target.astype(int)
        features = features / 255.0
    else:
        labels = target
        lo, hi = features.min(axis=0), features.max(axis=0)
        features = (features - lo) / np.where(hi > lo, hi - lo, 1.0)
    if shape is not None:
        try:
            features = features.reshape((len(features),) + tuple(shape))
        except ValueError:
            raise ParseError(f"{path}: rows of {features.shape[1]} features cannot take shape {tuple(shape)}") from None
    return Dataset(features, labels, split_tags(len(labels), test_size, val_size, seed), task)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def make_blobs(n: int = 200, num_classes: int = 3, shape: Tuple[int, ...] = (6, 6),
               spread: float = 0.15, test_size: Union[int, float] = 0.25, seed: int = 0) -> Dataset:
    """Class-dependent image prototypes plus Gaussian noise, clipped to [0, 1]."""
    rng = np.random.default_rng(seed)
    centres = rng.uniform(0.0, 1.0, size=(num_classes,) + tuple(shape))
    labels = np.arange(n) % num_classes
    rng.shuffle(labels)
    features = np.clip(centres[labels] + rng.normal(0.0, spread, size=(n,) + tuple(shape)), 0.0, 1.0)
    return Dataset(features, labels, split_tags(n, test_size, 0, seed), "classification")


def make_series(n: int = 300, window: int = 8, features: int = 2, horizon: int = 1,
                period: float = 24.0, noise: float = 0.01, test_size: Union[int, float] = 0.2,
                seed: int = 0) -> Dataset:
    """Sliding windows over a sinusoid-plus-trend series; target is the value ``horizon`` steps on.

    Feature 0 is the series itself, further features are seasonal phase
    encodings; all scaled to [0, 1].  Targets stay within [0.2, 0.8] so they
    are far from zero (MAPE) and inside the sigmoid approximation's range.
    """
    rng = np.random.default_rng(seed)
    length = n + window + horizon
    t = np.arange(length)
    series = 0.35 + 0.2 * t / length + 0.2 * np.sin(2 * np.pi * t / period)
    series = series + rng.normal(0.0, noise, size=length)
    series = np.clip(series, 0.2, 0.8)
    channels = [series]
    for j in range(1, features):
        phase = np.sin(2 * np.pi * t / period + j * np.pi / 2)
        channels.append(0.5 + 0.5 * phase)
    stacked = np.stack(channels, axis=-1)
    X = np.stack([stacked[i:i + window] for i in range(n)])
    y = series[window + horizon - 1:window + horizon - 1 + n]
    return Dataset(X, y, split_tags(n, test_size, 0, seed), "regression")


def write_csv(ds: Dataset, path, pixel_scale: float = 255.0) -> None:
    """Inverse of :func:`load_csv` for classification data (labels + 0-255 pixels)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for x, y in zip(ds.features, ds.labels):
            flat = np.asarray(x).ravel()
            if ds.task == "classification":
                writer.writerow([int(y), *np.rint(flat * pixel_scale).astype(int)])
            else:
                writer.writerow([repr(float(y)), *(repr(float(v)) for v in flat)])
