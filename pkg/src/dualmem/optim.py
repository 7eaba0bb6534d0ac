"""Adam with optional cosine learning-rate decay and parameter freezing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    cosine_decay: bool = True

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be > 0, got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("Adam betas must lie in [0, 1)")


class Adam:
    """Updates parameter arrays in place; frozen names are never touched."""

    def __init__(
        self,
        params: list[tuple[str, np.ndarray]],
        cfg: AdamConfig = AdamConfig(),
        total_steps: int | None = None,
        frozen: tuple[str, ...] = (),
    ):
        self.params = params
        self.cfg = cfg
        self.total_steps = total_steps
        self.frozen = set(frozen)
        known = {name for name, _ in params}
        missing = self.frozen - known
        if missing:
            raise ConfigError(f"cannot freeze unknown parameters: {sorted(missing)}")
        self.m = {name: np.zeros_like(p) for name, p in params}
        self.v = {name: np.zeros_like(p) for name, p in params}
        self.t = 0

    def learning_rate(self) -> float:
        if not self.cfg.cosine_decay or not self.total_steps or self.total_steps <= 1:
            return self.cfg.lr
        frac = min(self.t, self.total_steps - 1) / (self.total_steps - 1)
        return self.cfg.lr * 0.5 * (1.0 + np.cos(np.pi * frac))

    def step(self, grads: dict[str, np.ndarray]) -> None:
        lr = self.learning_rate()
        self.t += 1
        b1, b2, eps = self.cfg.beta1, self.cfg.beta2, self.cfg.eps
        for name, p in self.params:
            if name in self.frozen:
                continue
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            p -= lr * m_hat / (np.sqrt(v_hat) + eps)
