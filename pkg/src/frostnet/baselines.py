"""Brute-force k-nearest-neighbors baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset

DEFAULT_K = 5
# cap on the [chunk, N, D] distance workspace
_CHUNK_BUDGET = 32_000_000


@dataclass(frozen=True)
class KnnModel:
    """Lazy learner: stores the training data verbatim."""

    features: np.ndarray
    labels: np.ndarray
    k: int


def knn_fit(train: Dataset, k: int = DEFAULT_K) -> KnnModel:
    if k < 1 or k % 2 == 0:
        raise ValueError(f"k must be a positive odd integer, got {k}")
    if k > train.n:
        raise ValueError(f"k={k} exceeds the {train.n} training samples")
    return KnnModel(features=train.features, labels=train.labels, k=k)


def knn_predict(model: KnnModel, queries: np.ndarray) -> np.ndarray:
    """Majority vote among the k nearest training points by Euclidean distance.

    Distance ties break toward the lower training index; vote ties cannot
    occur because k is odd.
    """
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != model.features.shape[1]:
        raise ValueError(
            f"queries have shape {q.shape}, training data has {model.features.shape[1]} features"
        )
    n_train, dim = model.features.shape
    chunk = max(1, _CHUNK_BUDGET // max(1, n_train * dim))
    out = np.empty(q.shape[0], dtype=np.int64)
    for start in range(0, q.shape[0], chunk):
        block = q[start : start + chunk]
        sq = ((block[:, None, :] - model.features[None, :, :]) ** 2).sum(axis=2)
        # stable sort keeps the lower training index first among equal distances
        nearest = np.argsort(sq, axis=1, kind="stable")[:, : model.k]
        votes = model.labels[nearest].sum(axis=1)
        out[start : start + block.shape[0]] = (votes * 2 > model.k).astype(np.int64)
    return out
