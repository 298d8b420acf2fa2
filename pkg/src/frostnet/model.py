"""The 1-D convolutional network: configuration, parameters, forward/backward.

Each block is conv -> batch-norm -> ReLU -> max-pool; the final features are
flattened into one dense layer followed by a softmax. Backward passes are
hand-derived in tensor_ops and composed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor_ops as T
from .tensor_ops import LayerGradients, RunningStats


@dataclass(frozen=True)
class ArchitectureConfig:
    input_length: int = 2151
    conv_filters: tuple[int, ...] = (64, 128, 32)
    conv_kernel: int = 7
    pool_windows: tuple[int, ...] = (9, 5, 7)
    num_classes: int = 2

    def __post_init__(self):
        object.__setattr__(self, "conv_filters", tuple(int(f) for f in self.conv_filters))
        object.__setattr__(self, "pool_windows", tuple(int(w) for w in self.pool_windows))
        if len(self.conv_filters) != len(self.pool_windows):
            raise ValueError(
                f"{len(self.conv_filters)} conv blocks but {len(self.pool_windows)} pool windows"
            )
        if self.input_length < 1:
            raise ValueError(f"input length must be >= 1, got {self.input_length}")
        if self.conv_kernel < 1:
            raise ValueError(f"conv kernel must be >= 1, got {self.conv_kernel}")
        if any(f < 1 for f in self.conv_filters):
            raise ValueError(f"conv filter counts must be >= 1, got {self.conv_filters}")
        if any(w < 1 for w in self.pool_windows):
            raise ValueError(f"pool windows must be >= 1, got {self.pool_windows}")
        if self.num_classes < 2:
            raise ValueError(f"need >= 2 classes, got {self.num_classes}")

    @property
    def num_blocks(self) -> int:
        return len(self.conv_filters)


def feature_lengths(config: ArchitectureConfig) -> tuple[list[int], int]:
    """Length after each conv and pool stage, plus the flattened dense input.

    Pure arithmetic: conv shrinks by kernel-1, pooling floor-divides. No
    validation here; build_model rejects non-positive stages.
    """
    lengths: list[int] = []
    length = config.input_length
    for window in config.pool_windows:
        length = length - config.conv_kernel + 1
        lengths.append(length)
        length = length // window if length >= 0 else -1
        lengths.append(length)
    channels = config.conv_filters[-1] if config.conv_filters else 1
    return lengths, length * channels


def audit_shapes(config: ArchitectureConfig) -> tuple[list[int], int]:
    """feature_lengths plus rejection of any non-positive stage."""
    lengths, dense_in = feature_lengths(config)
    for i, length in enumerate(lengths):
        stage = ("conv" if i % 2 == 0 else "pool") + str(i // 2 + 1)
        if length < 1:
            raise ValueError(
                f"architecture audit failed: {stage} output length is {length} "
                f"(input_length {config.input_length}, kernel {config.conv_kernel}, "
                f"pools {config.pool_windows})"
            )
    return lengths, dense_in


@dataclass
class ConvBlockParams:
    kernels: np.ndarray
    bias: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    stats: RunningStats


@dataclass
class ModelParams:
    """All learnable parameters plus batch-norm running statistics."""

    config: ArchitectureConfig
    blocks: list[ConvBlockParams]
    dense_weights: np.ndarray
    dense_bias: np.ndarray

    def trainable(self) -> dict[str, np.ndarray]:
        """Name -> array views of every learnable parameter (running stats excluded)."""
        out: dict[str, np.ndarray] = {}
        for i, block in enumerate(self.blocks):
            out[f"block{i}.kernels"] = block.kernels
            out[f"block{i}.bias"] = block.bias
            out[f"block{i}.gamma"] = block.gamma
            out[f"block{i}.beta"] = block.beta
        out["dense.weights"] = self.dense_weights
        out["dense.bias"] = self.dense_bias
        return out

    def all_arrays(self) -> dict[str, np.ndarray]:
        """Trainable parameters plus running statistics, for serialization."""
        out = self.trainable()
        for i, block in enumerate(self.blocks):
            out[f"block{i}.running_mean"] = block.stats.mean
            out[f"block{i}.running_var"] = block.stats.var
        return out


def build_model(config: ArchitectureConfig, seed: int) -> ModelParams:
    """He-initialized parameters: weights ~ N(0, 2/fan_in), biases zero,
    gamma 1 / beta 0, running mean 0 / variance 1. Deterministic per seed."""
    _, dense_in = audit_shapes(config)
    rng = np.random.default_rng(seed)
    blocks: list[ConvBlockParams] = []
    c_in = 1
    for c_out in config.conv_filters:
        fan_in = c_in * config.conv_kernel
        blocks.append(
            ConvBlockParams(
                kernels=rng.standard_normal((c_out, c_in, config.conv_kernel))
                * np.sqrt(2.0 / fan_in),
                bias=np.zeros(c_out),
                gamma=np.ones(c_out),
                beta=np.zeros(c_out),
                stats=RunningStats(mean=np.zeros(c_out), var=np.ones(c_out)),
            )
        )
        c_in = c_out
    dense_weights = rng.standard_normal((dense_in, config.num_classes)) * np.sqrt(2.0 / dense_in)
    return ModelParams(
        config=config,
        blocks=blocks,
        dense_weights=dense_weights,
        dense_bias=np.zeros(config.num_classes),
    )


@dataclass
class BlockCache:
    conv_in: np.ndarray
    bn_cache: T.BatchNormCache
    relu_in: np.ndarray
    pool_argmax: np.ndarray
    pool_in_length: int


@dataclass
class ForwardCache:
    params: ModelParams
    blocks: list[BlockCache] = field(default_factory=list)
    flat: np.ndarray | None = None
    pre_flatten_shape: tuple[int, ...] = ()


def forward(
    params: ModelParams, batch: np.ndarray, mode: str
) -> tuple[np.ndarray, ForwardCache | None]:
    """Run the network on a [N, input_length] batch.

    Returns class probabilities [N, num_classes] and, in train mode, the
    cache backward() needs. Eval mode normalizes with running statistics
    and caches nothing.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown forward mode {mode!r}")
    feats = np.asarray(batch, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] != params.config.input_length:
        raise ValueError(
            f"batch shape {feats.shape} does not match input length {params.config.input_length}"
        )
    T.require_finite("batch", feats)

    cache = ForwardCache(params=params) if mode == "train" else None
    x = feats[:, None, :]
    for block, window in zip(params.blocks, params.config.pool_windows):
        conv_in = x
        x = T.conv1d(x, block.kernels, block.bias)
        x, bn_cache = T.batchnorm1d(x, block.gamma, block.beta, block.stats, mode)
        relu_in = x
        x = T.relu(x)
        pool_in_length = x.shape[-1]
        x, argmax = T.maxpool1d(x, window)
        if cache is not None:
            cache.blocks.append(
                BlockCache(
                    conv_in=conv_in,
                    bn_cache=bn_cache,
                    relu_in=relu_in,
                    pool_argmax=argmax,
                    pool_in_length=pool_in_length,
                )
            )
    flat = x.reshape(x.shape[0], -1)
    logits = T.dense(flat, params.dense_weights, params.dense_bias)
    probs = T.softmax(logits)
    if cache is not None:
        cache.flat = flat
        cache.pre_flatten_shape = x.shape
    return probs, cache


def backward(
    params: ModelParams, cache: ForwardCache, d_logits: np.ndarray
) -> dict[str, np.ndarray]:
    """Gradients of the loss w.r.t. every learnable parameter.

    Requires the cache from a train-mode forward on the same params object;
    does not modify the parameters.
    """
    if cache is None or cache.params is not params:
        raise ValueError("cache does not belong to these parameters")
    d_out = np.asarray(d_logits, dtype=np.float64)
    expected = (cache.flat.shape[0], params.config.num_classes)
    if d_out.shape != expected:
        raise ValueError(f"d_logits shape {d_out.shape} does not match {expected}")

    grads: dict[str, np.ndarray] = {}
    dense_grads = T.dense_backward(d_out, cache.flat, params.dense_weights)
    grads["dense.weights"] = dense_grads.d_params["weights"]
    grads["dense.bias"] = dense_grads.d_params["bias"]

    dx = dense_grads.d_input.reshape(cache.pre_flatten_shape)
    for i in reversed(range(len(params.blocks))):
        block = params.blocks[i]
        blk_cache = cache.blocks[i]
        window = params.config.pool_windows[i]
        dx = T.maxpool1d_backward(dx, blk_cache.pool_argmax, window, blk_cache.pool_in_length)
        dx = T.relu_backward(dx, blk_cache.relu_in)
        bn_grads = T.batchnorm1d_backward(dx, blk_cache.bn_cache)
        grads[f"block{i}.gamma"] = bn_grads.d_params["gamma"]
        grads[f"block{i}.beta"] = bn_grads.d_params["beta"]
        conv_grads = T.conv1d_backward(bn_grads.d_input, blk_cache.conv_in, block.kernels)
        grads[f"block{i}.kernels"] = conv_grads.d_params["kernels"]
        grads[f"block{i}.bias"] = conv_grads.d_params["bias"]
        dx = conv_grads.d_input
    return grads


def predict_probabilities(
    params: ModelParams, features: np.ndarray, chunk_size: int = 256
) -> np.ndarray:
    """Eval-mode probabilities for any number of samples, chunked."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ValueError(f"features must be [N, D], got shape {feats.shape}")
    parts = []
    for start in range(0, feats.shape[0], chunk_size):
        probs, _ = forward(params, feats[start : start + chunk_size], "eval")
        parts.append(probs)
    return np.vstack(parts) if parts else np.empty((0, params.config.num_classes))


def predict_labels(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Argmax class per sample; an exact probability tie goes to class 0."""
    probs = predict_probabilities(params, features)
    return (probs[:, 1] > probs[:, 0]).astype(np.int64)
