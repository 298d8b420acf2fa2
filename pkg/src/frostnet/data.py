"""Dataset ingestion, synthetic spectra, splitting, replication, batching.

The CSV interchange format is one row per sample: D feature columns (the
band values) followed by a single 0/1 label column. A header row is
optional and auto-detected. Values are written with shortest round-trip
float formatting, so save/load preserves every bit.

The synthetic generator is a stand-in for field-collected spectra: each
class is a smooth base curve (class 1 carries extra signature bumps at
designated band ranges) plus band-correlated noise built from random
low-frequency harmonics. At zero noise the classes are exactly separable;
raising the noise makes them overlap.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor_ops import require_finite

DEFAULT_REPLICATION_RATIO = 4.0


@dataclass(frozen=True)
class Dataset:
    """N spectral samples with binary labels (0 healthy, 1 frosted)."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels)
        if feats.ndim != 2:
            raise ValueError(f"features must be [N, D], got shape {feats.shape}")
        if labs.shape != (feats.shape[0],):
            raise ValueError(
                f"{labs.shape[0] if labs.ndim == 1 else labs.shape} labels for {feats.shape[0]} samples"
            )
        if labs.size and not np.isin(labs, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        require_finite("features", feats)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs.astype(np.int64))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic spectra generator."""

    n_per_class: tuple[int, int] = (940, 60)
    dim: int = 2151
    signature_centers: tuple[float, ...] = (0.30, 0.55, 0.80)
    signature_signs: tuple[float, ...] = (1.0, -1.0, 1.0)
    signature_width: float = 0.025
    signature_amplitude: float = 0.35
    noise_scale: float = 0.45
    smoothness: float = 0.02
    noise_components: int = 48
    seed: int = 7

    def __post_init__(self):
        object.__setattr__(self, "n_per_class", tuple(int(n) for n in self.n_per_class))
        object.__setattr__(self, "signature_centers", tuple(float(c) for c in self.signature_centers))
        object.__setattr__(self, "signature_signs", tuple(float(s) for s in self.signature_signs))
        if len(self.n_per_class) != 2 or any(n < 1 for n in self.n_per_class):
            raise ValueError(f"n_per_class must be two counts >= 1, got {self.n_per_class}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.noise_scale < 0:
            raise ValueError(f"noise scale must be >= 0, got {self.noise_scale}")
        if len(self.signature_centers) != len(self.signature_signs):
            raise ValueError("one sign per signature center")
        if self.smoothness <= 0 or self.signature_width <= 0:
            raise ValueError("smoothness and signature width must be positive")
        if self.noise_components < 1:
            raise ValueError("need at least one noise component")


def _bump(t: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-0.5 * ((t - center) / width) ** 2)


def class_profiles(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free mean spectrum of each class."""
    t = np.arange(spec.dim) / spec.dim
    base = 0.55 * _bump(t, 0.35, 0.16) + 0.85 * _bump(t, 0.72, 0.10) + 0.25
    signature = np.zeros(spec.dim)
    for center, sign in zip(spec.signature_centers, spec.signature_signs):
        signature += sign * _bump(t, center, spec.signature_width)
    return base, base + spec.signature_amplitude * signature


def synth_generate(spec: SynthSpec) -> Dataset:
    """Deterministic synthetic dataset: class-0 rows first, then class 1.

    Noise is a sum of random harmonics with frequencies up to
    1 / (2 * smoothness) cycles over the band range, shared across the
    dataset, with per-sample coefficients. The harmonic mix has exactly
    unit variance at every band before scaling.
    """
    rng = np.random.default_rng(spec.seed)
    healthy, frosted = class_profiles(spec)
    n0, n1 = spec.n_per_class
    clean = np.vstack(
        [np.tile(healthy, (n0, 1)), np.tile(frosted, (n1, 1))]
    )
    labels = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])

    if spec.noise_scale > 0:
        t = np.arange(spec.dim) / spec.dim
        m = spec.noise_components
        freqs = rng.uniform(0.5, 1.0 / (2.0 * spec.smoothness), size=m)
        phase = 2.0 * math.pi * np.outer(freqs, t)
        basis = np.vstack([np.cos(phase), np.sin(phase)])
        coeffs = rng.standard_normal((n0 + n1, 2 * m))
        clean = clean + spec.noise_scale * (coeffs @ basis) / math.sqrt(m)

    return Dataset(features=clean, labels=labels)


# ---------------------------------------------------------------------------
# CSV interchange

def save_csv(dataset: Dataset, path, header: bool = True) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"band_{i}" for i in range(dataset.dim)] + ["label"])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def _is_numeric_row(cells: list[str]) -> bool:
    try:
        for cell in cells:
            float(cell)
    except ValueError:
        return False
    return True


def load_csv(path) -> Dataset:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [(i + 1, cells) for i, cells in enumerate(rows) if cells]
    if not rows:
        raise ValueError(f"{path} contains no data rows")
    if not _is_numeric_row(rows[0][1]):
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path} contains only a header row")

    width = len(rows[0][1])
    if width < 2:
        raise ValueError(f"{path} row {rows[0][0]}: need at least one feature column plus a label")
    features = np.empty((len(rows), width - 1))
    labels = np.empty(len(rows), dtype=np.int64)
    for out_idx, (line_no, cells) in enumerate(rows):
        if len(cells) != width:
            raise ValueError(f"{path} row {line_no}: expected {width} columns, found {len(cells)}")
        try:
            values = [float(c) for c in cells[:-1]]
        except ValueError:
            raise ValueError(f"{path} row {line_no}: non-numeric feature value") from None
        try:
            label = float(cells[-1])
        except ValueError:
            raise ValueError(f"{path} row {line_no}: non-numeric label") from None
        if label not in (0.0, 1.0):
            raise ValueError(f"{path} row {line_no}: label must be 0 or 1, got {cells[-1]}")
        features[out_idx] = values
        labels[out_idx] = int(label)
    return Dataset(features=features, labels=labels)


# ---------------------------------------------------------------------------
# splitting, replication, batching

def stratified_split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Per-class split: floor(count * fraction) to train, remainder to test.

    Shuffles within each class; the union of the two parts is a permutation
    of the input.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for cls in (0, 1):
        members = np.flatnonzero(dataset.labels == cls)
        if members.size < 2:
            raise ValueError(f"class {cls} has {members.size} samples; need at least 2 to split")
        n_train = int(members.size * train_fraction)
        if n_train < 1:
            raise ValueError(
                f"class {cls} would get 0 training samples at fraction {train_fraction}"
            )
        order = rng.permutation(members)
        train_idx.append(order[:n_train])
        test_idx.append(order[n_train:])
    tr = np.concatenate(train_idx)
    te = np.concatenate(test_idx)
    return (
        Dataset(dataset.features[tr], dataset.labels[tr]),
        Dataset(dataset.features[te], dataset.labels[te]),
    )


def replicate_minority(train: Dataset, max_ratio: float = DEFAULT_REPLICATION_RATIO) -> Dataset:
    """Duplicate minority rows (cycled in order) until majority/minority <= max_ratio."""
    if max_ratio < 1.0:
        raise ValueError(f"max ratio must be >= 1, got {max_ratio}")
    n0, n1 = train.class_counts()
    if n0 == 0 or n1 == 0:
        raise ValueError(f"both classes must be present, got counts {(n0, n1)}")
    minority_class = 0 if n0 < n1 else 1
    n_min, n_maj = min(n0, n1), max(n0, n1)
    target = max(n_min, math.ceil(n_maj / max_ratio))
    if target == n_min:
        return train
    members = np.flatnonzero(train.labels == minority_class)
    extra = members[np.arange(target - n_min) % n_min]
    return Dataset(
        features=np.vstack([train.features, train.features[extra]]),
        labels=np.concatenate([train.labels, train.labels[extra]]),
    )


def batch_iter(dataset: Dataset, batch_size: int, seed: int, epoch: int):
    """Yield (features, labels) batches covering every sample exactly once.

    A fresh full shuffle is keyed by (seed, epoch); the last batch may be
    partial.
    """
    if batch_size < 1:
        raise ValueError(f"batch size must be >= 1, got {batch_size}")
    rng = np.random.default_rng([seed, epoch])
    order = rng.permutation(dataset.n)
    for start in range(0, dataset.n, batch_size):
        picked = order[start : start + batch_size]
        yield dataset.features[picked], dataset.labels[picked]


# ---------------------------------------------------------------------------
# standardization

@dataclass(frozen=True)
class Standardizer:
    """Per-band z-score transform fitted on training data."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, features: np.ndarray) -> np.ndarray:
        feats = np.asarray(features, dtype=np.float64)
        if feats.shape[-1] != self.mean.shape[0]:
            raise ValueError(
                f"features have {feats.shape[-1]} bands, standardizer was fitted on {self.mean.shape[0]}"
            )
        return (feats - self.mean) / self.std


def fit_standardizer(features: np.ndarray) -> Standardizer:
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] < 1:
        raise ValueError(f"need a non-empty [N, D] feature matrix, got shape {feats.shape}")
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return Standardizer(mean=mean, std=std)
