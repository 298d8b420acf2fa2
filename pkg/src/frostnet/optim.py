"""Adam with bias correction and a step-decay learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrainConfig:
    """Training hyperparameters. Defaults are the full-scale settings."""

    epochs: int = 1500
    batch_size: int = 256
    base_lr: float = 1.0e-3
    lr_decay_factor: float = 0.1
    lr_decay_every: int = 300
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    c: float = 2.0
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs", "batch_size", "lr_decay_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("base_lr", "beta1", "beta2", "eps_adam", "c"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.lr_decay_factor <= 1.0:
            raise ValueError(f"lr_decay_factor must be in (0, 1], got {self.lr_decay_factor}")


@dataclass
class AdamState:
    """First/second moment estimates per parameter, plus the step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={name: np.zeros_like(arr) for name, arr in params.items()},
            v={name: np.zeros_like(arr) for name, arr in params.items()},
        )


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    config: TrainConfig,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One Adam update, applied in place to the parameter arrays.

    Bias-corrected moments: m_hat = m / (1 - beta1^t), v_hat likewise, and
    theta -= lr * m_hat / (sqrt(v_hat) + eps).
    """
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if set(params) != set(grads) or set(params) != set(state.m):
        raise ValueError("parameter, gradient, and state keys do not match")

    state.t += 1
    correction1 = 1.0 - config.beta1**state.t
    correction2 = 1.0 - config.beta2**state.t
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ValueError(
                f"gradient for {name} has shape {g.shape}, parameter has {theta.shape}"
            )
        m = state.m[name]
        v = state.v[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * g * g
        theta -= lr * (m / correction1) / (np.sqrt(v / correction2) + config.eps_adam)
    return params, state


def lr_at_epoch(config: TrainConfig, epoch: int) -> float:
    """base_lr scaled down by decay_factor every decay_every epochs."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return config.base_lr * config.lr_decay_factor ** (epoch // config.lr_decay_every)
