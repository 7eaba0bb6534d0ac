"""Spiking networks with a shared slow state-space memory.

Fast leaky integrate-and-fire dynamics coupled to a compact linear memory per
layer, trained with surrogate-gradient BPTT, plus an access-exact simulator of
the matching near-memory-compute dataflow.
"""

__version__ = "0.1.0"

from .memory import (
    ContinuousSystem,
    DiscretizedMemory,
    FoldedReadout,
    MemoryState,
    StateSpaceConfig,
    build_legendre_system,
    build_memory,
    discretize_zoh,
    dilated_index,
    fold_readout,
    memory_step,
)

__all__ = [
    "ContinuousSystem",
    "DiscretizedMemory",
    "FoldedReadout",
    "MemoryState",
    "StateSpaceConfig",
    "build_legendre_system",
    "build_memory",
    "discretize_zoh",
    "dilated_index",
    "fold_readout",
    "memory_step",
    "__version__",
]
