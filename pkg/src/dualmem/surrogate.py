"""Spike nonlinearities: hard threshold plus smooth surrogates.

Each surrogate kind defines a smooth spike function sigma(v) and its exact
derivative sigma'(v), where v = membrane - threshold. The derivative is
bounded, even in v, and integrates to 1, so it is a proper smearing of the
Heaviside derivative. The hard forward uses the step function; backprop
substitutes sigma'. The smoothed forward (used for gradient checking) uses
sigma itself, making the backward pass its exact gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import jit
from .errors import ConfigError

RECTANGULAR = 0
FAST_SIGMOID = 1
ATAN = 2

_KIND_CODES = {"rectangular": RECTANGULAR, "fast-sigmoid": FAST_SIGMOID, "atan": ATAN}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}

SPIKE_HARD = 0
SPIKE_SMOOTH = 1


@jit
def smooth_spike(v, kind, param):
    """sigma(v): rectangular -> hard sigmoid of width param; otherwise slope param."""
    if kind == RECTANGULAR:
        return np.minimum(np.maximum(v / param + 0.5, 0.0), 1.0)
    elif kind == FAST_SIGMOID:
        return 0.5 * (1.0 + param * v / (1.0 + param * np.abs(v)))
    else:
        return 0.5 + np.arctan(0.5 * np.pi * param * v) / np.pi


@jit
def spike_grad(v, kind, param):
    """sigma'(v), the surrogate derivative used in place of the Heaviside's."""
    if kind == RECTANGULAR:
        return (np.abs(v) <= 0.5 * param).astype(np.float64) / param
    elif kind == FAST_SIGMOID:
        den = 1.0 + param * np.abs(v)
        return 0.5 * param / (den * den)
    else:
        t = 0.5 * np.pi * param * v
        return 0.5 * param / (1.0 + t * t)


@dataclass(frozen=True)
class SurrogateSpec:
    """Which surrogate to use and its width (rectangular) or slope (others)."""

    kind: str = "rectangular"
    param: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in _KIND_CODES:
            raise ConfigError(
                f"unknown surrogate {self.kind!r}; expected one of {sorted(_KIND_CODES)}"
            )
        if self.param <= 0:
            raise ConfigError(f"surrogate parameter must be > 0, got {self.param}")

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    def spike(self, v: np.ndarray) -> np.ndarray:
        return smooth_spike(np.asarray(v, dtype=np.float64), self.code, self.param)

    def grad(self, v: np.ndarray) -> np.ndarray:
        return spike_grad(np.asarray(v, dtype=np.float64), self.code, self.param)
