"""Layer parameters, running state, and single-step dynamics.

The step functions here are the readable reference implementation of each
layer variant; :mod:`dualmem.network` runs the same arithmetic over full
sequences through the compiled kernels, and a parity test pins the two paths
to bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError
from .memory import DiscretizedMemory, MemoryState, StateSpaceConfig, memory_step

VARIANTS = ("plain", "recurrent", "delay", "memory", "readout")


@dataclass(frozen=True)
class LIFParams:
    """Leaky integrate-and-fire constants for one layer."""

    decay: float = 0.9
    threshold: float = 1.0
    reset: str = "soft-subtract"

    def __post_init__(self) -> None:
        if not 0.0 < self.decay < 1.0:
            raise ConfigError(f"membrane decay must be in (0, 1), got {self.decay}")
        if self.threshold <= 0.0:
            raise ConfigError(f"threshold must be > 0, got {self.threshold}")
        if self.reset not in ("soft-subtract", "hard-zero", "none"):
            raise ConfigError(f"unknown reset mode {self.reset!r}")


@dataclass
class LayerParams:
    """All weights and constants of one layer.

    Exactly one variant is active: memory (w_mem/w_comp/bias/mem present),
    recurrent (w_rec present), delay (delays present), or plain. The readout
    variant is a plain non-spiking integrator used as the network head.
    """

    w_ff: np.ndarray  # (N, M)
    lif: LIFParams = field(default_factory=LIFParams)
    fx: str = "relu"
    w_mem: np.ndarray | None = None  # (N, d)
    w_comp: np.ndarray | None = None  # (M,)
    bias: np.ndarray = field(default_factory=lambda: np.zeros(1))  # scalar, as (1,)
    mem: DiscretizedMemory | None = None
    mem_cfg: StateSpaceConfig | None = None
    dilation: int = 1
    w_rec: np.ndarray | None = None  # (N, N)
    delays: np.ndarray | None = None  # (M,) nonnegative ints
    variant: str = "plain"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown layer variant {self.variant!r}")
        n, m = self.w_ff.shape
        flags = [self.mem is not None, self.w_rec is not None, self.delays is not None]
        if sum(flags) > 1:
            raise ConfigError("layer variants are mutually exclusive")
        if np.isscalar(self.bias):
            self.bias = np.array([float(self.bias)])
        if self.mem is not None:
            d = self.mem.dim
            if d > n:
                raise ConfigError(f"memory dim {d} exceeds layer width {n}")
            if self.w_mem is None or self.w_mem.shape != (n, d):
                raise DimensionError(f"w_mem must have shape {(n, d)}")
            if self.w_comp is None or self.w_comp.shape != (m,):
                raise DimensionError(f"w_comp must have shape {(m,)}")
            if self.dilation < 1:
                raise ConfigError(f"dilation must be >= 1, got {self.dilation}")
        if self.w_rec is not None and self.w_rec.shape != (n, n):
            raise DimensionError(f"w_rec must have shape {(n, n)}")
        if self.delays is not None:
            if self.delays.shape != (m,):
                raise DimensionError(f"delays must have shape {(m,)}, one per input")
            if self.delays.min() < 0:
                raise ConfigError("delays must be nonnegative")

    @property
    def width(self) -> int:
        return self.w_ff.shape[0]

    @property
    def fan_in(self) -> int:
        return self.w_ff.shape[1]

    @property
    def mem_dim(self) -> int:
        return self.mem.dim if self.mem is not None else 0


@dataclass
class LayerState:
    """Running state: membranes, memory, last spikes, delay ring buffer."""

    u: np.ndarray  # (N,)
    m: MemoryState
    s: np.ndarray  # (N,) last emitted spikes
    delay_ring: np.ndarray | None = None  # (depth, M), depth = max delay + 1


def init_state(params: LayerParams) -> LayerState:
    n = params.width
    d = params.mem_dim
    ring = None
    if params.delays is not None:
        depth = int(params.delays.max()) + 1
        ring = np.zeros((depth, params.fan_in))
    return LayerState(
        u=np.zeros(n), m=MemoryState(m=np.zeros(max(d, 1))), s=np.zeros(n), delay_ring=ring
    )


def lif_step(u: np.ndarray, current: np.ndarray, lif: LIFParams):
    """One membrane update: integrate, threshold, reset.

    Returns the post-reset membrane and the binary spike vector. A spike fires
    wherever the pre-reset membrane meets or exceeds the threshold.
    """
    p = lif.decay * u + current
    s = (p >= lif.threshold).astype(np.float64)
    if lif.reset == "soft-subtract":
        u_next = p - lif.threshold * s
    elif lif.reset == "hard-zero":
        u_next = p * (1.0 - s)
    else:
        u_next = p
    return u_next, s


def compress_drive(s_pre: np.ndarray, w_comp: np.ndarray, bias: float, fx: str) -> float:
    """Scalar memory drive: f(w_comp . s_pre + bias)."""
    val = float(np.dot(w_comp, s_pre) + bias)
    if fx == "relu":
        return val if val > 0.0 else 0.0
    if fx == "identity":
        return val
    if fx == "tanh":
        return float(np.tanh(val))
    raise ConfigError(f"unknown drive nonlinearity {fx!r}")


def memory_layer_step(state: LayerState, s_pre: np.ndarray, params: LayerParams, k: int):
    """Memory-variant step: update slow state on dilated steps, inject, spike.

    The memory is stepped only when k is a multiple of the dilation factor;
    between updates the injected current reuses the held state.
    """
    if s_pre.shape != (params.fan_in,):
        raise DimensionError(f"input shape {s_pre.shape} != {(params.fan_in,)}")
    x = compress_drive(s_pre, params.w_comp, float(params.bias[0]), params.fx)
    mstate = state.m
    if k % params.dilation == 0:
        mstate = replace(memory_step(mstate, x, params.mem), k_last_update=k)
    current = np.dot(params.w_ff, s_pre)
    current = current + np.dot(params.w_mem, mstate.m)
    u_next, s_out = lif_step(state.u, current, params.lif)
    return LayerState(u=u_next, m=mstate, s=s_out, delay_ring=None), s_out


def plain_layer_step(state: LayerState, s_pre: np.ndarray, params: LayerParams, k: int):
    current = np.dot(params.w_ff, s_pre)
    u_next, s_out = lif_step(state.u, current, params.lif)
    return LayerState(u=u_next, m=state.m, s=s_out, delay_ring=None), s_out


def recurrent_layer_step(state: LayerState, s_pre: np.ndarray, params: LayerParams, k: int):
    current = np.dot(params.w_ff, s_pre)
    current = current + np.dot(params.w_rec, state.s)
    u_next, s_out = lif_step(state.u, current, params.lif)
    return LayerState(u=u_next, m=state.m, s=s_out, delay_ring=None), s_out


def delay_layer_step(state: LayerState, s_pre: np.ndarray, params: LayerParams, k: int):
    """Delay-variant step: channel j is seen shifted by delays[j] timesteps."""
    if state.delay_ring is None:
        raise ConfigError("delay layer state must carry a primed ring buffer")
    depth = state.delay_ring.shape[0]
    if int(params.delays.max()) >= depth:
        raise ConfigError(f"delay {int(params.delays.max())} exceeds ring depth {depth}")
    ring = state.delay_ring.copy()
    ring[k % depth, :] = s_pre
    eff = np.zeros_like(s_pre)
    for j in range(s_pre.shape[0]):
        kk = k - int(params.delays[j])
        if kk >= 0:
            eff[j] = ring[kk % depth, j]
    current = np.dot(params.w_ff, eff)
    u_next, s_out = lif_step(state.u, current, params.lif)
    return LayerState(u=u_next, m=state.m, s=s_out, delay_ring=ring), s_out


_STEP_FNS = {
    "plain": plain_layer_step,
    "readout": plain_layer_step,
    "recurrent": recurrent_layer_step,
    "delay": delay_layer_step,
    "memory": memory_layer_step,
}


def layer_step(state: LayerState, s_pre: np.ndarray, params: LayerParams, k: int):
    """Dispatch one step to the variant's reference implementation."""
    return _STEP_FNS[params.variant](state, s_pre, params, k)


def kernel_args(params: LayerParams) -> dict:
    """Pack a LayerParams into the flag/dummy form the kernels expect."""
    n, m = params.w_ff.shape
    use_rec = params.w_rec is not None
    use_mem = params.mem is not None
    use_delay = params.delays is not None
    return dict(
        w_ff=np.ascontiguousarray(params.w_ff),
        w_rec=np.ascontiguousarray(params.w_rec) if use_rec else np.zeros((1, 1)),
        use_rec=use_rec,
        w_mem=np.ascontiguousarray(params.w_mem) if use_mem else np.zeros((1, 1)),
        w_comp=np.ascontiguousarray(params.w_comp) if use_mem else np.zeros(1),
        bias=float(params.bias[0]),
        a_bar=np.ascontiguousarray(params.mem.A_bar) if use_mem else np.zeros((1, 1)),
        b_bar=np.ascontiguousarray(params.mem.B_bar) if use_mem else np.zeros(1),
        use_mem=use_mem,
        delays=params.delays.astype(np.int64) if use_delay else np.zeros(1, dtype=np.int64),
        use_delay=use_delay,
        decay=params.lif.decay,
        threshold=params.lif.threshold,
        reset=kernels.reset_code(params.lif.reset),
        fx=kernels.fx_code(params.fx),
        dilation=params.dilation,
    )
