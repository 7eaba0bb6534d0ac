"""Slow state-space memory: construction, discretization, stepping, folding.

The memory is a single-input linear system ``m'(t) = A m(t) + B x(t)`` whose
(A, B) realize a Legendre-basis approximation of a sliding delay window.
Discretized with zero-order hold it becomes ``m[k] = A_bar m[k-1] + B_bar x[k]``.
A_bar and B_bar are frozen after construction; no gradients flow into them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import DilationError, DimensionError, DiscretizationOverflowError


@dataclass(frozen=True)
class StateSpaceConfig:
    """Shape and timing of one layer's slow memory.

    dim: number of memory states (d).
    window: length of the represented sliding window, in timesteps (theta).
    dt: discretization step; dt=0 is the degenerate identity limit.
    window_scaling: divide A and B by ``window`` before discretization, so the
        discrete system represents a window of ``window`` steps at dt=1.
    """

    dim: int
    window: float
    dt: float = 1.0
    window_scaling: bool = True

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DimensionError(f"memory dim must be >= 1, got {self.dim}")
        if self.window < 1:
            raise DimensionError(f"window must be >= 1, got {self.window}")
        if self.dt < 0:
            raise DimensionError(f"dt must be >= 0, got {self.dt}")


@dataclass(frozen=True)
class ContinuousSystem:
    """Continuous-time (A, B) pair. Entries are integers before window scaling."""

    A: np.ndarray  # (d, d)
    B: np.ndarray  # (d,)


@dataclass(frozen=True)
class DiscretizedMemory:
    """Zero-order-hold discretization (A_bar, B_bar) of a ContinuousSystem."""

    A_bar: np.ndarray  # (d, d)
    B_bar: np.ndarray  # (d,)

    @property
    def dim(self) -> int:
        return self.A_bar.shape[0]


@dataclass(frozen=True)
class MemoryState:
    """Memory vector plus the index of the last dilated update."""

    m: np.ndarray  # (d,)
    k_last_update: int = 0


@dataclass(frozen=True)
class FoldedReadout:
    """Readout folded through the transition: P = W A_bar, v = W B_bar.

    For any state and drive, ``P m[k-1] + v x[k] == W m[k]`` exactly, which
    lets the readout run in parallel with the state update.
    """

    P: np.ndarray  # (N, d)
    v: np.ndarray  # (N,)


def build_legendre_system(dim: int) -> ContinuousSystem:
    """Construct the Legendre delay system of the given dimension.

    a_ij = (2i+1) * (-1 if i < j else (-1)^(i-j+1)),
    b_i  = (2i+1) * (-1)^i,  for i, j in [0, dim).
    All eigenvalues of A have negative real part.
    """
    if dim < 1:
        raise DimensionError(f"memory dim must be >= 1, got {dim}")
    q = np.arange(dim, dtype=np.float64)
    r = 2.0 * q + 1.0
    jj, ii = np.meshgrid(q, q)
    A = np.where(ii < jj, -1.0, (-1.0) ** (ii - jj + 1.0)) * r[:, None]
    B = (-1.0) ** q * r
    return ContinuousSystem(A=A, B=B)


def discretize_zoh(sys: ContinuousSystem, cfg: StateSpaceConfig) -> DiscretizedMemory:
    """Exact zero-order-hold discretization.

    A_bar = exp(A dt), B_bar = A^-1 (exp(A dt) - I) B, with A, B first divided
    by the window length when ``cfg.window_scaling`` is set. A must be
    invertible (always true for the Legendre construction).
    """
    A = np.asarray(sys.A, dtype=np.float64)
    B = np.asarray(sys.B, dtype=np.float64)
    if A.shape != (cfg.dim, cfg.dim) or B.shape != (cfg.dim,):
        raise DimensionError(
            f"system dims {A.shape}/{B.shape} do not match config dim {cfg.dim}"
        )
    if cfg.window_scaling:
        A = A / cfg.window
        B = B / cfg.window
    A_bar = scipy.linalg.expm(A * cfg.dt)
    B_bar = np.linalg.solve(A, (A_bar - np.eye(cfg.dim)) @ B)
    if not (np.all(np.isfinite(A_bar)) and np.all(np.isfinite(B_bar))):
        raise DiscretizationOverflowError(
            f"non-finite discretization for dim={cfg.dim}, dt={cfg.dt}; reduce dt"
        )
    return DiscretizedMemory(A_bar=A_bar, B_bar=B_bar)


def build_memory(cfg: StateSpaceConfig) -> DiscretizedMemory:
    """Convenience: Legendre system for cfg.dim, discretized per cfg."""
    return discretize_zoh(build_legendre_system(cfg.dim), cfg)


def memory_step(state: MemoryState, x: float, mem: DiscretizedMemory) -> MemoryState:
    """One state update: m' = A_bar m + B_bar x. Pure function."""
    if state.m.shape != (mem.dim,):
        raise DimensionError(f"state dim {state.m.shape} != memory dim {mem.dim}")
    return replace(state, m=mem.A_bar @ state.m + mem.B_bar * x)


def fold_readout(w_mem: np.ndarray, mem: DiscretizedMemory) -> FoldedReadout:
    """Fold a readout matrix through the transition: P = W A_bar, v = W B_bar."""
    w_mem = np.asarray(w_mem, dtype=np.float64)
    if w_mem.ndim != 2 or w_mem.shape[1] != mem.dim:
        raise DimensionError(
            f"readout shape {w_mem.shape} does not conform to memory dim {mem.dim}"
        )
    return FoldedReadout(P=w_mem @ mem.A_bar, v=w_mem @ mem.B_bar)


def dilated_index(k: int, d_s: int) -> int:
    """Index of the most recent dilated update at or before step k."""
    if d_s < 1:
        raise DilationError(f"dilation factor must be >= 1, got {d_s}")
    if k < 0:
        raise DimensionError(f"timestep must be >= 0, got {k}")
    return (k // d_s) * d_s


def spectral_radius(mat: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvals(mat)).max())
