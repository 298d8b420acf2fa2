"""Cost-sensitive binary loss: cross-entropy with per-class cost weights.

Each class carries a weight w_i = alpha_i * exp(miss_rate_i). The fixed
factor alpha_i is the inverse class frequency (total count over c times the
class count), so the minority class always outweighs the majority. The
adjustment factor is the fraction of positive samples the model currently
misclassifies; it starts at 1 (assume nothing is detected yet) and is
re-estimated from a confusion matrix as training proceeds, so the extra
pressure on the positive class relaxes as its recall improves. The majority
class adjustment is pinned to 0.

Predicted probabilities are clamped to [1e-12, 1 - 1e-12] before any log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metrics import ConfusionMatrix

PROB_CLAMP = 1e-12
INITIAL_MISS_RATE = 1.0
DEFAULT_COST_SCALE = 2.0


@dataclass(frozen=True)
class CostMatrix:
    """Misclassification costs c_ij for true class i predicted as class j.

    Correct classifications are free; missing a positive must cost at least
    as much as a false alarm.
    """

    c01: float
    c10: float
    c00: float = 0.0
    c11: float = 0.0

    def __post_init__(self):
        if self.c00 != 0.0 or self.c11 != 0.0:
            raise ValueError("correct-classification costs must be zero")
        if self.c01 < 0.0 or self.c10 < 0.0:
            raise ValueError("misclassification costs must be non-negative")
        if self.c10 < self.c01:
            raise ValueError(
                f"missing a positive (cost {self.c10}) must cost at least a false alarm (cost {self.c01})"
            )


@dataclass(frozen=True)
class CostWeights:
    """Per-class loss weights w_i = alpha_i * exp(miss_rate_i)."""

    alpha: tuple[float, float]
    miss_rate: tuple[float, float]
    w: tuple[float, float]
    c: float = DEFAULT_COST_SCALE

    def __post_init__(self):
        if self.miss_rate[0] != 0.0:
            raise ValueError("the majority-class adjustment factor is pinned to 0")
        if not 0.0 <= self.miss_rate[1] <= 1.0:
            raise ValueError(f"positive miss rate {self.miss_rate[1]} outside [0, 1]")
        for i in range(2):
            expected = self.alpha[i] * math.exp(self.miss_rate[i])
            if self.w[i] != expected:
                raise ValueError(f"w[{i}] = {self.w[i]} != alpha*exp(miss) = {expected}")

    def with_miss_rate(self, positive_rate: float) -> "CostWeights":
        return cost_weights(self.alpha, positive_rate, self.c)


def cost_weights(alpha, positive_miss: float, c: float = DEFAULT_COST_SCALE) -> CostWeights:
    """Assemble CostWeights from fixed factors and the positive miss rate."""
    a0, a1 = float(alpha[0]), float(alpha[1])
    rates = (0.0, float(positive_miss))
    return CostWeights(
        alpha=(a0, a1),
        miss_rate=rates,
        w=(a0 * math.exp(rates[0]), a1 * math.exp(rates[1])),
        c=c,
    )


def inverse_frequency_alpha(class_counts, c: float = DEFAULT_COST_SCALE) -> np.ndarray:
    """Fixed factors alpha_i = (sum_j N_j) / (c * N_i)."""
    counts = np.asarray(class_counts, dtype=np.float64)
    if counts.ndim != 1 or counts.size < 2:
        raise ValueError(f"need per-class counts for >= 2 classes, got shape {counts.shape}")
    if np.any(counts < 1):
        raise ValueError(f"every class needs at least one sample, got {counts.tolist()}")
    if c <= 0:
        raise ValueError(f"scale c must be positive, got {c}")
    return counts.sum() / (c * counts)


def positive_miss_rate(cm: ConfusionMatrix, previous: float) -> float:
    """Fraction of positive samples currently misclassified.

    With no positives in the tally there is nothing to measure, so the
    previous value is retained.
    """
    seen = cm.n11 + cm.n10
    if seen == 0:
        return previous
    return cm.n10 / seen


def _clamped(probabilities) -> np.ndarray:
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"probabilities must be a non-empty vector, got shape {p.shape}")
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def _binary_labels(labels, n: int) -> np.ndarray:
    y = np.asarray(labels)
    if y.shape != (n,):
        raise ValueError(f"labels shape {y.shape} does not match {n} probabilities")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return y.astype(np.float64)


def cross_entropy(probabilities, labels) -> float:
    """Mean binary cross-entropy; probabilities are P(class 1)."""
    p = _clamped(probabilities)
    y = _binary_labels(labels, p.size)
    terms = y * np.log(p) + (1.0 - y) * np.log(1.0 - p)
    return float(-terms.mean())


def cost_sensitive_loss(
    probabilities, labels, weights: CostWeights
) -> tuple[float, np.ndarray]:
    """Cost-weighted binary cross-entropy and its per-sample gradient.

    Each sample's term is scaled by the weight of its true class. Returns
    the scalar loss and dL/dp for each predicted probability. With both
    weights equal to 1 this reduces exactly to cross_entropy.
    """
    p = _clamped(probabilities)
    y = _binary_labels(labels, p.size)
    w = np.where(y == 1.0, weights.w[1], weights.w[0])
    terms = w * (y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    loss = float(-terms.mean())
    d_prob = w * (p - y) / (p * (1.0 - p)) / p.size
    return loss, d_prob


def softmax_loss_gradient(probabilities, labels, weights: CostWeights) -> np.ndarray:
    """Fused gradient of the cost-sensitive loss w.r.t. the softmax logits.

    probabilities: softmax output [N, 2]. The chain through the softmax
    collapses to w_y * (p - onehot(y)) / N.
    """
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError(f"expected [N, 2] probabilities, got shape {p.shape}")
    y = _binary_labels(labels, p.shape[0]).astype(int)
    onehot = np.zeros_like(p)
    onehot[np.arange(p.shape[0]), y] = 1.0
    w = np.where(y == 1, weights.w[1], weights.w[0])[:, None]
    return w * (p - onehot) / p.shape[0]


def expected_cost(posterior, cm: CostMatrix, assigned_class: int) -> float:
    """Expected misclassification cost of assigning one sample to a class.

    Diagnostic only: sums P(other class) times the cost of being wrong
    about it. Not used in training.
    """
    p = np.asarray(posterior, dtype=np.float64)
    if p.shape != (2,):
        raise ValueError(f"posterior must have exactly 2 entries, got shape {p.shape}")
    if not math.isclose(p.sum(), 1.0, rel_tol=0.0, abs_tol=1e-9):
        raise ValueError(f"posterior sums to {p.sum()}, not 1")
    if assigned_class not in (0, 1):
        raise ValueError(f"assigned class must be 0 or 1, got {assigned_class}")
    costs = ((cm.c00, cm.c01), (cm.c10, cm.c11))
    other = 1 - assigned_class
    return float(p[other] * costs[assigned_class][other])
