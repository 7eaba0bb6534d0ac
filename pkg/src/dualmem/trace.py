"""Recorded forward-run traces and their binary file format.

A trace carries, per layer: the emitted spike raster (stored sparse as flat
channel indices plus per-step offsets), the membrane and memory snapshots,
and the scalar memory drive, together with the dense network input. This is
what the dataflow simulator consumes and what ``eval --emit-trace`` writes.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import TraceMismatchError
from .network import ForwardTrace, Network

TRACE_FORMAT = "dualmem-trace-v1"


@dataclass(frozen=True)
class LayerTraceMeta:
    width: int
    fan_in: int
    mem_dim: int
    dilation: int
    variant: str
    decay: float
    threshold: float
    reset: str
    fx: str


@dataclass
class RunTrace:
    inputs: np.ndarray  # (T, M0) dense drive (binary for event data)
    meta: list[LayerTraceMeta]
    spikes: list[np.ndarray]  # per layer (T, N) binary
    u: list[np.ndarray]  # per layer (T, N)
    m: list[np.ndarray]  # per layer (T, d); (T, 1) zeros when memoryless
    x: list[np.ndarray]  # per layer (T,)

    @property
    def num_steps(self) -> int:
        return self.inputs.shape[0]

    def layer_input(self, index: int) -> np.ndarray:
        """The drive layer ``index`` consumed: network input or upstream spikes."""
        return self.inputs if index == 0 else self.spikes[index - 1]

    def nnz(self, index: int) -> np.ndarray:
        """Nonzero drive entries per step feeding layer ``index``."""
        return np.count_nonzero(self.layer_input(index), axis=1).astype(np.int64)


def from_forward(trace: ForwardTrace, net: Network) -> RunTrace:
    if trace.smooth:
        raise TraceMismatchError("traces must be recorded from a hard (spiking) forward pass")
    meta = []
    for lp in net.layers:
        meta.append(
            LayerTraceMeta(
                width=lp.width,
                fan_in=lp.fan_in,
                mem_dim=lp.mem_dim,
                dilation=lp.dilation,
                variant=lp.variant,
                decay=lp.lif.decay,
                threshold=lp.lif.threshold,
                reset=lp.lif.reset,
                fx=lp.fx,
            )
        )
    return RunTrace(
        inputs=trace.inputs,
        meta=meta,
        spikes=[rec.s for rec in trace.layers],
        u=[rec.u for rec in trace.layers],
        m=[rec.m for rec in trace.layers],
        x=[rec.x for rec in trace.layers],
    )


def save_trace(rt: RunTrace, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {"inputs": rt.inputs}
    for i, s in enumerate(rt.spikes):
        idx = []
        off = np.zeros(s.shape[0] + 1, dtype=np.int64)
        for k in range(s.shape[0]):
            nz = np.nonzero(s[k])[0].astype(np.int32)
            idx.append(nz)
            off[k + 1] = off[k] + len(nz)
        arrays[f"s_idx_{i}"] = np.concatenate(idx) if idx else np.zeros(0, dtype=np.int32)
        arrays[f"s_off_{i}"] = off
        arrays[f"u_{i}"] = rt.u[i]
        arrays[f"m_{i}"] = rt.m[i]
        arrays[f"x_{i}"] = rt.x[i]
    header = {"format": TRACE_FORMAT, "layers": [asdict(m) for m in rt.meta]}
    arrays["meta"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    path.write_bytes(buf.getvalue())


def load_trace(path: str | Path) -> RunTrace:
    blob = np.load(Path(path), allow_pickle=False)
    try:
        header = json.loads(bytes(blob["meta"]).decode())
    except (KeyError, ValueError) as exc:
        raise TraceMismatchError(f"{path}: not a trace file") from exc
    if header.get("format") != TRACE_FORMAT:
        raise TraceMismatchError(f"{path}: unsupported trace format")
    meta = [LayerTraceMeta(**m) for m in header["layers"]]
    spikes, u, m, x = [], [], [], []
    for i, lm in enumerate(meta):
        off = blob[f"s_off_{i}"]
        idx = blob[f"s_idx_{i}"]
        T = len(off) - 1
        s = np.zeros((T, lm.width))
        for k in range(T):
            s[k, idx[off[k] : off[k + 1]]] = 1.0
        spikes.append(s)
        u.append(blob[f"u_{i}"])
        m.append(blob[f"m_{i}"])
        x.append(blob[f"x_{i}"])
    return RunTrace(inputs=blob["inputs"], meta=meta, spikes=spikes, u=u, m=m, x=x)
