"""Array primitives and forward/gradient pairs for every layer in the network.

All arithmetic is 64-bit float. Convolution is implemented as
cross-correlation (no kernel flip), the usual deep-learning convention.
Shape problems are rejected with a ValueError that names the offending
dimensions. Every operation is a pure function of its inputs, except
``batchnorm1d`` in train mode, whose only side effect is updating the
running statistics it was handed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BATCHNORM_EPS = 1e-5
BATCHNORM_MOMENTUM = 0.1


def require_finite(name: str, arr: np.ndarray) -> None:
    """Reject NaN/Inf before they can propagate silently."""
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")


def _as_float_array(name: str, values, ndim: int | tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    allowed = (ndim,) if isinstance(ndim, int) else ndim
    if arr.ndim not in allowed:
        raise ValueError(
            f"{name} must have rank {' or '.join(map(str, allowed))}, got shape {arr.shape}"
        )
    require_finite(name, arr)
    return arr


@dataclass
class LayerGradients:
    """Backward-pass output: gradient w.r.t. the layer input plus one
    gradient per learnable parameter, keyed by parameter name."""

    d_input: np.ndarray
    d_params: dict[str, np.ndarray] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# convolution

def conv1d(inputs, kernels, bias) -> np.ndarray:
    """Valid (no padding), stride-1 cross-correlation.

    inputs: [C_in, L] or batched [N, C_in, L]; kernels: [C_out, C_in, K];
    bias: [C_out]. Output length is L - K + 1.
    """
    x = _as_float_array("conv1d input", inputs, (2, 3))
    k = _as_float_array("conv1d kernels", kernels, 3)
    b = _as_float_array("conv1d bias", bias, 1)

    batched = x.ndim == 3
    if not batched:
        x = x[None]
    n, c_in, length = x.shape
    c_out, k_in, width = k.shape
    if b.shape[0] != c_out:
        raise ValueError(f"bias has {b.shape[0]} entries for {c_out} output channels")
    if k_in != c_in:
        raise ValueError(f"kernels expect {k_in} input channels, input has {c_in}")
    if width < 1:
        raise ValueError("kernel width must be >= 1")
    if length < width:
        raise ValueError(f"input length {length} is shorter than kernel width {width}")

    l_out = length - width + 1
    # window matrix [N * L_out, C_in * K] so the contraction is one GEMM
    cols = sliding_window_view(x, width, axis=2)
    cols = cols.transpose(0, 2, 1, 3).reshape(n * l_out, c_in * width)
    out = cols @ k.reshape(c_out, c_in * width).T + b
    out = out.reshape(n, l_out, c_out).transpose(0, 2, 1)
    return out if batched else out[0]


def conv1d_backward(d_output, inputs, kernels) -> LayerGradients:
    """Exact gradients of conv1d given upstream d_output.

    Returns d_input plus d_params {"kernels", "bias"}.
    """
    x = _as_float_array("conv1d input", inputs, (2, 3))
    k = _as_float_array("conv1d kernels", kernels, 3)

    batched = x.ndim == 3
    if not batched:
        x = x[None]
    d_out = _as_float_array("conv1d upstream gradient", d_output, (2, 3))
    if d_out.ndim == 2:
        d_out = d_out[None]

    n, c_in, length = x.shape
    c_out, _, width = k.shape
    l_out = length - width + 1
    if d_out.shape != (n, c_out, l_out):
        raise ValueError(
            f"upstream gradient shape {d_out.shape} does not match output shape {(n, c_out, l_out)}"
        )

    d_bias = d_out.sum(axis=(0, 2))

    cols = sliding_window_view(x, width, axis=2)
    cols = cols.transpose(0, 2, 1, 3).reshape(n * l_out, c_in * width)
    d_kernels = (
        d_out.transpose(1, 0, 2).reshape(c_out, n * l_out) @ cols
    ).reshape(c_out, c_in, width)

    # d_input is the full correlation of d_output with flipped kernels
    padded = np.zeros((n, c_out, length + width - 1))
    padded[:, :, width - 1 : width - 1 + l_out] = d_out
    cols_up = sliding_window_view(padded, width, axis=2)
    cols_up = cols_up.transpose(0, 2, 1, 3).reshape(n * length, c_out * width)
    flipped = k[:, :, ::-1].transpose(1, 0, 2).reshape(c_in, c_out * width)
    d_input = (cols_up @ flipped.T).reshape(n, length, c_in).transpose(0, 2, 1)
    if not batched:
        d_input = d_input[0]
    return LayerGradients(d_input, {"kernels": d_kernels, "bias": d_bias})


# ---------------------------------------------------------------------------
# pooling

def maxpool1d(inputs, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Non-overlapping max-pooling: windows of width `window`, stride `window`.

    A trailing remainder shorter than the window is dropped. Returns the
    pooled array and the within-window argmax map needed by the backward
    pass (first occurrence wins on ties).
    """
    x = _as_float_array("maxpool1d input", inputs, (2, 3))
    if window < 1:
        raise ValueError("pooling window must be >= 1")
    length = x.shape[-1]
    if window > length:
        raise ValueError(f"pooling window {window} exceeds input length {length}")

    n_windows = length // window
    trimmed = x[..., : n_windows * window]
    tiles = trimmed.reshape(*x.shape[:-1], n_windows, window)
    argmax = tiles.argmax(axis=-1)
    pooled = np.take_along_axis(tiles, argmax[..., None], axis=-1)[..., 0]
    return pooled, argmax


def maxpool1d_backward(d_output, argmax: np.ndarray, window: int, input_length: int) -> np.ndarray:
    """Route the upstream gradient to each window's argmax position."""
    d_out = _as_float_array("maxpool1d upstream gradient", d_output, (2, 3))
    if d_out.shape != argmax.shape:
        raise ValueError(
            f"upstream gradient shape {d_out.shape} does not match pooled shape {argmax.shape}"
        )
    n_windows = argmax.shape[-1]
    tiles = np.zeros((*d_out.shape, window))
    np.put_along_axis(tiles, argmax[..., None], d_out[..., None], axis=-1)
    d_input = np.zeros((*d_out.shape[:-1], input_length))
    d_input[..., : n_windows * window] = tiles.reshape(*d_out.shape[:-1], n_windows * window)
    return d_input


# ---------------------------------------------------------------------------
# batch normalization

@dataclass
class RunningStats:
    """Exponential moving average of per-channel mean and variance."""

    mean: np.ndarray | None = None
    var: np.ndarray | None = None

    @property
    def initialized(self) -> bool:
        return self.mean is not None and self.var is not None

    def copy(self) -> "RunningStats":
        return RunningStats(
            None if self.mean is None else self.mean.copy(),
            None if self.var is None else self.var.copy(),
        )


@dataclass
class BatchNormCache:
    x_hat: np.ndarray
    inv_std: np.ndarray
    gamma: np.ndarray


def batchnorm1d(
    inputs,
    gamma,
    beta,
    stats: RunningStats,
    mode: str,
    eps: float = BATCHNORM_EPS,
    momentum: float = BATCHNORM_MOMENTUM,
) -> tuple[np.ndarray, BatchNormCache | None]:
    """Per-channel batch normalization over the batch-and-length axes.

    inputs: [N, C, L]. Train mode normalizes with batch statistics, applies
    gamma/beta, and folds the batch statistics into `stats` (the unbiased
    variance goes into the running estimate). Eval mode normalizes with the
    running statistics and returns no cache.
    """
    x = _as_float_array("batchnorm1d input", inputs, 3)
    g = _as_float_array("batchnorm1d gamma", gamma, 1)
    b = _as_float_array("batchnorm1d beta", beta, 1)
    n, c, length = x.shape
    if g.shape[0] != c or b.shape[0] != c:
        raise ValueError(
            f"gamma/beta sized {g.shape[0]}/{b.shape[0]} for {c} channels"
        )
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown batchnorm mode {mode!r}")

    if mode == "eval":
        if not stats.initialized:
            raise ValueError("eval-mode batchnorm requires running statistics")
        inv_std = 1.0 / np.sqrt(stats.var + eps)
        out = g[None, :, None] * (x - stats.mean[None, :, None]) * inv_std[None, :, None]
        out += b[None, :, None]
        return out, None

    count = n * length
    if count < 2:
        raise ValueError(f"train-mode batchnorm needs N*L >= 2 per channel, got {count}")
    mean = x.mean(axis=(0, 2))
    var = x.var(axis=(0, 2))
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean[None, :, None]) * inv_std[None, :, None]
    out = g[None, :, None] * x_hat + b[None, :, None]

    if not stats.initialized:
        stats.mean = np.zeros(c)
        stats.var = np.ones(c)
    unbiased = var * count / (count - 1)
    stats.mean += momentum * (mean - stats.mean)
    stats.var += momentum * (unbiased - stats.var)
    return out, BatchNormCache(x_hat=x_hat, inv_std=inv_std, gamma=g)


def batchnorm1d_backward(d_output, cache: BatchNormCache) -> LayerGradients:
    """Gradients through train-mode batch normalization."""
    d_out = _as_float_array("batchnorm1d upstream gradient", d_output, 3)
    x_hat = cache.x_hat
    if d_out.shape != x_hat.shape:
        raise ValueError(
            f"upstream gradient shape {d_out.shape} does not match input shape {x_hat.shape}"
        )
    n, _, length = d_out.shape
    count = n * length

    d_gamma = (d_out * x_hat).sum(axis=(0, 2))
    d_beta = d_out.sum(axis=(0, 2))

    d_x_hat = d_out * cache.gamma[None, :, None]
    sum_d = d_x_hat.sum(axis=(0, 2))
    sum_dx = (d_x_hat * x_hat).sum(axis=(0, 2))
    d_input = (cache.inv_std[None, :, None] / count) * (
        count * d_x_hat - sum_d[None, :, None] - x_hat * sum_dx[None, :, None]
    )
    return LayerGradients(d_input, {"gamma": d_gamma, "beta": d_beta})


# ---------------------------------------------------------------------------
# activation, dense, softmax

def relu(inputs) -> np.ndarray:
    x = _as_float_array("relu input", inputs, (1, 2, 3))
    return np.maximum(x, 0.0)


def relu_backward(d_output, inputs) -> np.ndarray:
    """Pass the gradient where the input was strictly positive (zero at 0)."""
    x = _as_float_array("relu input", inputs, (1, 2, 3))
    d_out = _as_float_array("relu upstream gradient", d_output, (1, 2, 3))
    if d_out.shape != x.shape:
        raise ValueError(f"upstream gradient shape {d_out.shape} does not match {x.shape}")
    return d_out * (x > 0.0)


def dense(inputs, weights, bias) -> np.ndarray:
    """Affine map: [N, F] @ [F, O] + [O]."""
    x = _as_float_array("dense input", inputs, 2)
    w = _as_float_array("dense weights", weights, 2)
    b = _as_float_array("dense bias", bias, 1)
    if x.shape[1] != w.shape[0]:
        raise ValueError(
            f"dense input has {x.shape[1]} features, weights expect {w.shape[0]}"
        )
    if b.shape[0] != w.shape[1]:
        raise ValueError(f"bias has {b.shape[0]} entries for {w.shape[1]} outputs")
    return x @ w + b


def dense_backward(d_output, inputs, weights) -> LayerGradients:
    x = _as_float_array("dense input", inputs, 2)
    w = _as_float_array("dense weights", weights, 2)
    d_out = _as_float_array("dense upstream gradient", d_output, 2)
    if d_out.shape != (x.shape[0], w.shape[1]):
        raise ValueError(
            f"upstream gradient shape {d_out.shape} does not match output shape {(x.shape[0], w.shape[1])}"
        )
    return LayerGradients(
        d_out @ w.T,
        {"weights": x.T @ d_out, "bias": d_out.sum(axis=0)},
    )


def softmax(logits) -> np.ndarray:
    """Row-wise softmax with max-subtraction for numerical stability."""
    z = _as_float_array("softmax logits", logits, 2)
    if z.shape[1] < 2:
        raise ValueError(f"softmax needs at least 2 classes, got {z.shape[1]}")
    shifted = z - z.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# numerical gradient oracle

def finite_difference_gradient(
    f: Callable[[np.ndarray], float], x, h: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate at a time."""
    base = np.asarray(x, dtype=np.float64)
    if h <= 0:
        raise ValueError("step size must be positive")
    grad = np.zeros_like(base)
    for idx in np.ndindex(*base.shape):
        plus = base.copy()
        plus[idx] += h
        minus = base.copy()
        minus[idx] -= h
        grad[idx] = (f(plus) - f(minus)) / (2.0 * h)
    return grad
