"""Network assembly: stacked layers, forward pass, checkpoints.

A network is a stack of hidden layers followed by a readout layer. The
readout is a non-spiking leaky integrator (threshold pushed out of reach, no
reset); the class scores are the mean over time of its membrane potential.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConfigError, DataFormatError, DimensionError
from .layers import LIFParams, LayerParams, kernel_args
from .memory import StateSpaceConfig, build_memory
from .surrogate import SPIKE_HARD, SPIKE_SMOOTH, SurrogateSpec

READOUT_THRESHOLD = 1e30


@dataclass(frozen=True)
class LayerSpec:
    """Declarative description of one hidden layer."""

    size: int
    variant: str = "plain"  # plain | recurrent | delay | memory
    mem_dim: int = 0
    window: float = 0.0
    dilation: int = 1
    decay: float = 0.9
    threshold: float = 1.0
    reset: str = "soft-subtract"
    fx: str = "relu"
    max_delay: int = 0

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ConfigError(f"layer size must be >= 1, got {self.size}")
        if self.variant not in ("plain", "recurrent", "delay", "memory"):
            raise ConfigError(f"unknown layer variant {self.variant!r}")
        if self.variant == "memory" and self.mem_dim > 0 and self.window < 1:
            raise ConfigError("memory layers need a window >= 1")
        if self.variant == "delay" and self.max_delay < 0:
            raise ConfigError("max_delay must be >= 0")


@dataclass(frozen=True)
class NetworkConfig:
    """Widths, variants, and supervision mode for a whole network."""

    input_channels: int
    outputs: int
    hidden: tuple[LayerSpec, ...]
    readout_decay: float = 0.9
    loss_mode: str = "mean"  # "mean" | "last"

    def __post_init__(self) -> None:
        if self.input_channels < 1 or self.outputs < 1:
            raise ConfigError("input_channels and outputs must be >= 1")
        if self.loss_mode not in ("mean", "last"):
            raise ConfigError(f"loss_mode must be 'mean' or 'last', got {self.loss_mode!r}")
        if not isinstance(self.hidden, tuple):
            object.__setattr__(self, "hidden", tuple(self.hidden))


@dataclass
class Network:
    cfg: NetworkConfig
    layers: list[LayerParams]  # hidden layers, then the readout layer last

    @property
    def readout(self) -> LayerParams:
        return self.layers[-1]


@dataclass
class LayerRecord:
    """Per-step histories of one layer from a forward pass."""

    s: np.ndarray  # (T, N) spikes (real-valued in smooth mode)
    u: np.ndarray  # (T, N) post-reset membrane
    p: np.ndarray  # (T, N) pre-reset membrane
    m: np.ndarray  # (T, d) memory state (d=1 dummy when absent)
    x: np.ndarray  # (T,) memory drive
    prex: np.ndarray  # (T,) drive pre-activation
    eff: np.ndarray  # (T, M) delay-shifted presynaptic activity


@dataclass
class ForwardTrace:
    inputs: np.ndarray  # (T, M0)
    layers: list[LayerRecord]
    logits: np.ndarray  # (C,) mean readout membrane
    smooth: bool
    surrogate: SurrogateSpec


def default_memory_dim(width: int, fraction: float = 0.075) -> int:
    """Default memory size: a small fraction of the layer width, at least 1."""
    return max(1, int(np.ceil(fraction * width)))


def _build_layer(spec: LayerSpec, fan_in: int, rng: np.random.Generator) -> LayerParams:
    n, m = spec.size, fan_in
    lif = LIFParams(decay=spec.decay, threshold=spec.threshold, reset=spec.reset)
    # Weight scale follows the threshold so initial firing rates do not depend
    # on the threshold choice (the dynamics are scale-equivariant).
    lim_ff = np.sqrt(6.0 / m) * spec.threshold
    w_ff = rng.uniform(-lim_ff, lim_ff, size=(n, m))
    if spec.variant == "memory" and spec.mem_dim > 0:
        d = spec.mem_dim
        mem_cfg = StateSpaceConfig(dim=d, window=spec.window)
        w_mem = rng.uniform(-np.sqrt(3.0 / d), np.sqrt(3.0 / d), size=(n, d)) * spec.threshold
        w_comp = rng.uniform(-np.sqrt(6.0 / m), np.sqrt(6.0 / m), size=m)
        return LayerParams(
            w_ff=w_ff,
            lif=lif,
            fx=spec.fx,
            w_mem=w_mem,
            w_comp=w_comp,
            bias=np.zeros(1),
            mem=build_memory(mem_cfg),
            mem_cfg=mem_cfg,
            dilation=spec.dilation,
            variant="memory",
        )
    if spec.variant == "recurrent":
        lim_rec = np.sqrt(6.0 / n) * spec.threshold
        w_rec = rng.uniform(-lim_rec, lim_rec, size=(n, n))
        return LayerParams(w_ff=w_ff, lif=lif, w_rec=w_rec, variant="recurrent")
    if spec.variant == "delay":
        delays = rng.integers(0, spec.max_delay + 1, size=m).astype(np.int64)
        return LayerParams(w_ff=w_ff, lif=lif, delays=delays, variant="delay")
    # "memory" with mem_dim == 0 degenerates to plain, drawing no extra weights.
    return LayerParams(w_ff=w_ff, lif=lif, variant="plain")


def init_network(cfg: NetworkConfig, seed: int) -> Network:
    """Build a network with freshly drawn weights (stream 0 of the seed)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    layers: list[LayerParams] = []
    fan_in = cfg.input_channels
    for spec in cfg.hidden:
        layers.append(_build_layer(spec, fan_in, rng))
        fan_in = spec.size
    lim_out = np.sqrt(6.0 / fan_in)
    w_out = rng.uniform(-lim_out, lim_out, size=(cfg.outputs, fan_in))
    layers.append(
        LayerParams(
            w_ff=w_out,
            lif=LIFParams(decay=cfg.readout_decay, threshold=READOUT_THRESHOLD, reset="none"),
            variant="readout",
        )
    )
    return Network(cfg=cfg, layers=layers)


def network_forward(
    net: Network,
    inputs: np.ndarray,
    smooth: bool = False,
    surrogate: SurrogateSpec = SurrogateSpec(),
):
    """Run a sample through the stack; returns (mean-membrane logits, trace)."""
    x = np.ascontiguousarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.cfg.input_channels:
        raise DimensionError(
            f"input shape {x.shape} does not match {net.cfg.input_channels} channels"
        )
    if x.shape[0] < 1:
        raise DimensionError("sample must have at least one timestep")
    mode = SPIKE_SMOOTH if smooth else SPIKE_HARD
    records: list[LayerRecord] = []
    cur = x
    for lp in net.layers:
        out = kernels.layer_forward(
            cur,
            **kernel_args(lp),
            spike_mode=mode,
            surr_kind=surrogate.code,
            surr_param=surrogate.param,
        )
        records.append(LayerRecord(*out))
        cur = records[-1].s
    logits = records[-1].u.mean(axis=0)
    return logits, ForwardTrace(
        inputs=x, layers=records, logits=logits, smooth=smooth, surrogate=surrogate
    )


def logits_for_mode(trace: ForwardTrace, loss_mode: str) -> np.ndarray:
    """Class scores under the given supervision mode."""
    u = trace.layers[-1].u
    if loss_mode == "mean":
        return u.mean(axis=0)
    if loss_mode == "last":
        return u[-1]
    raise ConfigError(f"unknown loss mode {loss_mode!r}")


# --- parameter bookkeeping and checkpoints ---------------------------------

def named_parameters(net: Network) -> list[tuple[str, np.ndarray]]:
    """Trainable tensors in a fixed order. Bias scalars appear as 1-element arrays."""
    out: list[tuple[str, np.ndarray]] = []
    for i, lp in enumerate(net.layers):
        prefix = f"layers.{i}."
        out.append((prefix + "w_ff", lp.w_ff))
        if lp.w_mem is not None:
            out.append((prefix + "w_mem", lp.w_mem))
            out.append((prefix + "w_comp", lp.w_comp))
            out.append((prefix + "bias", lp.bias))
        if lp.w_rec is not None:
            out.append((prefix + "w_rec", lp.w_rec))
    return out


def count_parameters(net: Network) -> int:
    """Trainable scalars: feedforward, memory readout, drive, bias, recurrent.

    Frozen transition matrices and fixed integer delays are excluded.
    """
    return sum(int(np.size(t)) for _, t in named_parameters(net))


def _layer_spec_dict(spec: LayerSpec) -> dict:
    return asdict(spec)


def config_to_dict(cfg: NetworkConfig) -> dict:
    return {
        "input_channels": cfg.input_channels,
        "outputs": cfg.outputs,
        "hidden": [_layer_spec_dict(s) for s in cfg.hidden],
        "readout_decay": cfg.readout_decay,
        "loss_mode": cfg.loss_mode,
    }


def config_from_dict(doc: dict) -> NetworkConfig:
    known = {"input_channels", "outputs", "hidden", "readout_decay", "loss_mode"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown network config keys: {sorted(unknown)}")
    hidden = []
    spec_fields = {f for f in LayerSpec.__dataclass_fields__}
    for i, h in enumerate(doc.get("hidden", [])):
        bad = set(h) - spec_fields
        if bad:
            raise ConfigError(f"unknown layer config keys in hidden[{i}]: {sorted(bad)}")
        hidden.append(LayerSpec(**h))
    return NetworkConfig(
        input_channels=doc["input_channels"],
        outputs=doc["outputs"],
        hidden=tuple(hidden),
        readout_decay=doc.get("readout_decay", 0.9),
        loss_mode=doc.get("loss_mode", "mean"),
    )


def save_checkpoint(net: Network, prefix: str | Path) -> None:
    """Flat float32 tensor archive (<prefix>.bin) plus JSON manifest (<prefix>.json).

    Tensors are stored row-major, concatenated in manifest order. Fixed
    integer delays ride along so a delay network round-trips exactly.
    """
    prefix = Path(prefix)
    tensors = list(named_parameters(net))
    for i, lp in enumerate(net.layers):
        if lp.delays is not None:
            tensors.append((f"layers.{i}.delays", lp.delays.astype(np.float64)))
    manifest = {"format": "dualmem-checkpoint-v1", "dtype": "float32", "tensors": []}
    offset = 0
    blobs = []
    for name, t in tensors:
        flat = np.ascontiguousarray(t, dtype=np.float32).ravel()
        manifest["tensors"].append(
            {"name": name, "shape": list(t.shape), "offset": offset, "size": int(flat.size)}
        )
        blobs.append(flat)
        offset += int(flat.size)
    manifest["network"] = config_to_dict(net.cfg)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    with open(prefix.with_suffix(".bin"), "wb") as fh:
        fh.write(np.concatenate(blobs).tobytes() if blobs else b"")
    with open(prefix.with_suffix(".json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(prefix: str | Path, seed: int = 0) -> Network:
    prefix = Path(prefix)
    with open(prefix.with_suffix(".json")) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != "dualmem-checkpoint-v1":
        raise DataFormatError(f"unrecognized checkpoint format in {prefix}.json")
    cfg = config_from_dict(manifest["network"])
    net = init_network(cfg, seed=seed)
    raw = np.fromfile(prefix.with_suffix(".bin"), dtype=np.float32)
    for entry in manifest["tensors"]:
        chunk = raw[entry["offset"] : entry["offset"] + entry["size"]]
        if chunk.size != entry["size"]:
            raise DataFormatError(f"checkpoint blob truncated at {entry['name']}")
        value = chunk.astype(np.float64).reshape(entry["shape"])
        _, idx, leaf = entry["name"].split(".")
        lp = net.layers[int(idx)]
        if leaf == "delays":
            lp.delays[...] = value.astype(np.int64)
        else:
            getattr(lp, leaf)[...] = value
    return net
