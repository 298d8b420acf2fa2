"""Confusion matrix and the evaluation metrics derived from it.

Class 1 (frosted) is the positive class throughout. Degenerate 0/0 ratios
are defined as 0 so reports never carry NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts n_ij = samples of true class i predicted as class j."""

    n00: int
    n01: int
    n10: int
    n11: int

    def __post_init__(self):
        for name in ("n00", "n01", "n10", "n11"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"confusion count {name} is negative: {value}")

    @property
    def total(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11

    def as_list(self) -> list[int]:
        return [self.n00, self.n01, self.n10, self.n11]


def confusion(predicted, actual) -> ConfusionMatrix:
    """Tally a 2x2 confusion matrix from binary label sequences."""
    pred = np.asarray(predicted)
    act = np.asarray(actual)
    if pred.shape != act.shape or pred.ndim != 1:
        raise ValueError(
            f"predicted and actual must be equal-length vectors, got {pred.shape} vs {act.shape}"
        )
    if pred.size == 0:
        raise ValueError("cannot tally an empty prediction sequence")
    for name, arr in (("predicted", pred), ("actual", act)):
        if not np.isin(arr, (0, 1)).all():
            raise ValueError(f"{name} labels must be 0 or 1")
    pred = pred.astype(int)
    act = act.astype(int)
    return ConfusionMatrix(
        n00=int(np.sum((act == 0) & (pred == 0))),
        n01=int(np.sum((act == 0) & (pred == 1))),
        n10=int(np.sum((act == 1) & (pred == 0))),
        n11=int(np.sum((act == 1) & (pred == 1))),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("accuracy is undefined for an empty confusion matrix")
    return (cm.n00 + cm.n11) / cm.total


def precision_recall_f1(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """Positive-class precision, recall, and their harmonic mean."""
    predicted_positive = cm.n11 + cm.n01
    actual_positive = cm.n11 + cm.n10
    precision = cm.n11 / predicted_positive if predicted_positive else 0.0
    recall = cm.n11 / actual_positive if actual_positive else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1
