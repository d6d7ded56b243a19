"""Adam with coupled L2 decay and the inverse-square-root warmup schedule."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..autodiff import Tensor
from ..errors import ConfigError, NumericalError


@dataclass
class OptimConfig:
    beta1: float = 0.9
    beta2: float = 0.98
    epsilon: float = 1e-8
    weight_decay: float = 0.001
    smoothing: float = 0.1
    warmup: int = 4000
    accum_steps: int = 32
    batch_size: int = 10
    patience: int = 14
    max_epochs: int = 1000
    max_steps: int | None = None
    lr_factor: float = 1.0
    num_workers: int = 0

    def __post_init__(self):
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("Adam betas must lie in [0, 1)")
        if self.epsilon <= 0 or self.weight_decay < 0 or self.lr_factor < 0:
            raise ConfigError("epsilon must be positive; weight_decay and lr_factor non-negative")
        if not 0 <= self.smoothing < 1:
            raise ConfigError("smoothing must lie in [0, 1)")
        for name in ("warmup", "accum_steps", "batch_size", "patience", "max_epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0 <= self.num_workers <= 5:
            raise ConfigError("num_workers must lie in [0, 5]")

    @property
    def effective_batch(self) -> int:
        return self.accum_steps * self.batch_size

    def to_dict(self) -> dict:
        return asdict(self)


def noam_lr(step: int, d_model: int, warmup: int = 4000, factor: float = 1.0) -> float:
    """factor * d_model^-0.5 * min(step^-0.5, step * warmup^-1.5)."""
    if step < 1:
        raise ValueError("step must be >= 1")
    return factor * d_model**-0.5 * min(step**-0.5, step * warmup**-1.5)


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Sequence[tuple[str, Tensor]], state: AdamState, lr: float, cfg: OptimConfig) -> None:
    """One in-place Adam update from the accumulated ``.grad`` of each parameter."""
    if not math.isfinite(lr):
        raise NumericalError(f"non-finite learning rate at step {state.step + 1}")
    for name, p in params:
        if p.grad is not None and not np.all(np.isfinite(p.grad)):
            raise NumericalError(f"non-finite gradient in {name} at step {state.step + 1}")
    state.step += 1
    t = state.step
    b1, b2 = cfg.beta1, cfg.beta2
    c1, c2 = 1.0 - b1**t, 1.0 - b2**t
    for name, p in params:
        g = np.zeros_like(p.data) if p.grad is None else p.grad.astype(p.dtype, copy=False)
        if cfg.weight_decay:
            g = g + cfg.weight_decay * p.data
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        update = (m / c1) / (np.sqrt(v / c2) + cfg.epsilon)
        p.data = (p.data - lr * update).astype(p.dtype, copy=False)
