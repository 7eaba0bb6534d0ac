"""Benchmark the hot kernels under the numba and pure-NumPy backends.

The backend is fixed per process at import time, so the comparison spawns one
child process per backend (via ``python -m dualmem.bench``) and aggregates
their reports. Checksums of the kernel outputs are compared to confirm the
two backends produce bit-identical numbers.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from . import kernels
from .backend import backend_name
from .layers import LIFParams, LayerParams, kernel_args
from .memory import StateSpaceConfig, build_memory
from .surrogate import SPIKE_HARD


def _workload(T: int, M: int, N: int, d: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    mem_cfg = StateSpaceConfig(dim=d, window=4 * d)
    params = LayerParams(
        w_ff=rng.normal(scale=0.3, size=(N, M)),
        lif=LIFParams(decay=0.9, threshold=1.0),
        w_mem=rng.normal(scale=0.2, size=(N, d)),
        w_comp=rng.normal(scale=0.3, size=M),
        bias=np.zeros(1),
        mem=build_memory(mem_cfg),
        mem_cfg=mem_cfg,
        variant="memory",
    )
    inputs = (rng.random((T, M)) < 0.2).astype(np.float64)
    gs_ext = rng.normal(size=(T, N))
    return params, inputs, gs_ext


def benchmark_backend(T: int, M: int, N: int, d: int, repeats: int) -> dict:
    """Time forward and forward+backward on the active backend."""
    params, inputs, gs_ext = _workload(T, M, N, d)
    ka = kernel_args(params)

    def forward():
        return kernels.layer_forward(
            inputs, **ka, spike_mode=SPIKE_HARD, surr_kind=0, surr_param=1.0
        )

    out = forward()  # warm-up triggers compilation on the numba path

    def backward():
        return kernels.layer_backward(
            out[6], out[0], out[2], out[3], out[5], gs_ext, np.zeros_like(gs_ext),
            ka["w_ff"], ka["w_rec"], ka["use_rec"], ka["w_mem"], ka["w_comp"],
            ka["a_bar"], ka["b_bar"], ka["use_mem"], ka["decay"], ka["threshold"],
            ka["reset"], ka["fx"], ka["dilation"], 0, 1.0,
        )

    bk = backward()
    fwd_times, bwd_times = [], []
    for _ in range(repeats):
        t0 = time.perf_counter()
        forward()
        fwd_times.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        backward()
        bwd_times.append(time.perf_counter() - t0)
    return {
        "backend": backend_name(),
        "dims": {"T": T, "M": M, "N": N, "d": d},
        "forward_ms": 1e3 * min(fwd_times),
        "backward_ms": 1e3 * min(bwd_times),
        "checksums": {
            "spikes": float(out[0].sum()),
            "membrane": repr(float(out[1].sum())),
            "w_ff_grad": repr(float(bk[0].sum())),
        },
    }


def compare_backends(T: int, M: int, N: int, d: int, repeats: int) -> dict:
    """Run the benchmark in one child process per backend and combine."""
    rows = []
    for name in ("numba", "numpy"):
        env = {**os.environ, "DUALMEM_BACKEND": name}
        cmd = [
            sys.executable, "-m", "dualmem.bench",
            "--steps", str(T), "--fan-in", str(M), "--width", str(N),
            "--mem-dim", str(d), "--repeats", str(repeats),
        ]
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            rows.append({"backend": name, "error": proc.stderr.strip()[-500:]})
            continue
        rows.append(json.loads(proc.stdout))
    ok = [r for r in rows if "error" not in r]
    result = {"rows": rows}
    if len(ok) == 2:
        result["bit_identical"] = ok[0]["checksums"] == ok[1]["checksums"]
        result["forward_speedup"] = ok[1]["forward_ms"] / ok[0]["forward_ms"]
        result["backward_speedup"] = ok[1]["backward_ms"] / ok[0]["backward_ms"]
    return result


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="time the layer kernels on this backend")
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--fan-in", type=int, default=140)
    parser.add_argument("--width", type=int, default=128)
    parser.add_argument("--mem-dim", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)
    report = benchmark_backend(args.steps, args.fan_in, args.width, args.mem_dim, args.repeats)
    print(json.dumps(report, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
