"""
chaostat - Optimizers
Bias-corrected Adam (optionally with decoupled weight decay) and a step learning-rate schedule
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from chaostat.utils.errors import ShapeError

logger = logging.getLogger(__name__)

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: Params) -> "AdamState":
        return cls(0, {k: np.zeros_like(p) for k, p in params.items()}, {k: np.zeros_like(p) for k, p in params.items()})


def adam_step(
    params: Params,
    grads: Params,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> Tuple[Params, AdamState]:
    """
    One Adam update. Parameters without a gradient entry are left untouched.
    weight_decay > 0 gives the decoupled (AdamW) variant.
    """
    if not state.m:
        state = AdamState.zeros_like(params)
    t = state.step + 1
    new_params: Params = {}
    new_m: Params = {}
    new_v: Params = {}
    for name, p in params.items():
        m_prev, v_prev = state.m[name], state.v[name]
        if m_prev.shape != p.shape:
            raise ShapeError(f"optimizer state for {name!r} has shape {m_prev.shape}, parameter has {p.shape}")
        g = grads.get(name)
        if g is None:
            new_params[name], new_m[name], new_v[name] = p, m_prev, v_prev
            continue
        g = np.real(g) if not np.iscomplexobj(p) else g
        m = beta1 * m_prev + (1.0 - beta1) * g
        v = beta2 * v_prev + (1.0 - beta2) * np.abs(g) ** 2
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        update = p - lr * m_hat / (np.sqrt(v_hat) + eps)
        if weight_decay:
            update = update - lr * weight_decay * p
        new_params[name], new_m[name], new_v[name] = update, m, v
    return new_params, AdamState(t, new_m, new_v)


@dataclass
class StepLR:
    """lr = base_lr * gamma ** (epoch // step_size)"""
    base_lr: float
    gamma: float = 0.7
    step_size: int = 100

    def __post_init__(self):
        if self.step_size < 1:
            raise ValueError(f"step_size must be >= 1, got {self.step_size}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")

    def lr_at(self, epoch: int) -> float:
        return self.base_lr * self.gamma ** (epoch // self.step_size)


class Adam:
    """Stateful wrapper around adam_step driven by an epoch-indexed StepLR"""

    def __init__(self, params: Params, lr: float = 1e-3, gamma: float = 1.0, step_size: int = 1,
                 betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = {k: np.array(v) for k, v in params.items()}
        self.schedule = StepLR(lr, gamma, step_size)
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.state = AdamState.zeros_like(self.params)
        self.epoch = 0

    @property
    def lr(self) -> float:
        return self.schedule.lr_at(self.epoch)

    def step(self, grads: Params) -> Params:
        self.params, self.state = adam_step(
            self.params, grads, self.state, self.lr,
            self.betas[0], self.betas[1], self.eps, self.weight_decay,
        )
        return self.params

    def end_epoch(self):
        previous = self.lr
        self.epoch += 1
        if self.lr != previous:
            logger.debug(f"learning rate {previous:.3e} -> {self.lr:.3e} at epoch {self.epoch}")


class AdamW(Adam):
    def __init__(self, params: Params, lr: float = 1e-3, weight_decay: float = 1e-2, **kwargs):
        super().__init__(params, lr=lr, weight_decay=weight_decay, **kwargs)
