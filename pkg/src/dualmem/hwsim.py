"""Access-exact simulator of the near-memory-compute dataflow.

Counts SRAM traffic, MACs, register accesses, and per-path cycles for a
recorded spike trace under a configurable schedule. The cycle model is
deliberately abstract (one MAC per cycle per path, single-word SRAM ports);
absolute cycles are not silicon timing, but counter *ratios* between
schedules are exact.

Dataflow model, per layer of dims (M inputs, N neurons, d memory states),
with S = nonzero inputs at a step and updates on steps where k % d_s == 0:

  paths       spike integration      S*N MACs
              memory integration     N*d MACs (plus N for the folded drive
                                     term when dependency breaking is on)
              memory update          d*d + d MACs
              neuron pass            N cycles (leak, folded drive, threshold)

  fusion      on:  one neuron-SRAM read/write pair per neuron per step
              off: three pairs (leak, spike-integration, memory-integration
                   sweeps; the baseline FSM always runs all three)

  stationarity  heterogeneous: weight reads follow the data (input-stationary
                    sparse path: S*N reads of w_ff; output-stationary dense
                    path: N*(d+1) reads of P and v per update step)
                uniform-output: w_ff swept in full, M*N reads per step
                uniform-input: dense path loses output stationarity, adding
                    N*(d+1) neuron read/write pairs per update step

  dependency breaking  on:  update and integration run in parallel; the
                            integration uses precomputed P = W A_bar and
                            v = W B_bar against the previous state
                       off: integration waits for the update and reads the
                            raw readout matrix (counted under ``p_reads``)

Critical path per step: max over compute paths plus the neuron pass when
breaking is on; the memory chain serializes (update then integration) when
off. The spike path is never serialized against the memory chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, TraceMismatchError
from .memory import fold_readout
from .trace import RunTrace

STATIONARITIES = ("heterogeneous", "uniform-output", "uniform-input")


@dataclass(frozen=True)
class CostModel:
    """Energy-proxy unit costs and geometry. Proxy values, not silicon."""

    sram_read: float = 1.0
    sram_write: float = 1.0
    mac: float = 0.2
    register: float = 0.01
    words_per_row: int = 4
    parallel_paths: int = 4
    neuron_register_slots: int = 4
    memory_register_slots: int = 2

    def __post_init__(self) -> None:
        for name in ("sram_read", "sram_write", "mac", "register"):
            if getattr(self, name) < 0:
                raise ConfigError(f"cost {name} must be >= 0")
        if self.words_per_row < 1 or self.neuron_register_slots < 1:
            raise ConfigError("row width and register slots must be >= 1")


@dataclass(frozen=True)
class ScheduleConfig:
    fusion: bool = True
    stationarity: str = "heterogeneous"
    dependency_breaking: bool = True
    dilation: int | None = None  # None: use each layer's own dilation

    def __post_init__(self) -> None:
        if self.stationarity not in STATIONARITIES:
            raise ConfigError(
                f"stationarity must be one of {STATIONARITIES}, got {self.stationarity!r}"
            )
        if self.dilation is not None and self.dilation < 1:
            raise ConfigError("schedule dilation must be >= 1")

    def label(self) -> str:
        return "+".join(
            [
                "fused" if self.fusion else "unfused",
                self.stationarity,
                "broken" if self.dependency_breaking else "serial",
            ]
        )


_COUNTERS = (
    "neuron_reads",
    "neuron_writes",
    "w_ff_reads",
    "p_reads",
    "v_reads",
    "w_comp_reads",
    "a_bar_reads",
    "b_bar_reads",
    "register_accesses",
    "macs_spike",
    "macs_compress",
    "macs_update",
    "macs_integration",
    "spike_cycles",
    "integration_cycles",
    "update_cycles",
    "neuron_cycles",
    "critical_cycles",
    "row_activations",
    "steps",
)


@dataclass
class AccessLedger:
    """Exact counters for one simulated segment. All fields are totals."""

    neuron_reads: int = 0
    neuron_writes: int = 0
    w_ff_reads: int = 0
    p_reads: int = 0  # readout-matrix reads: P when broken, raw W_m when serial
    v_reads: int = 0
    w_comp_reads: int = 0
    a_bar_reads: int = 0
    b_bar_reads: int = 0
    register_accesses: int = 0
    macs_spike: int = 0
    macs_compress: int = 0
    macs_update: int = 0
    macs_integration: int = 0
    spike_cycles: int = 0
    integration_cycles: int = 0
    update_cycles: int = 0
    neuron_cycles: int = 0
    critical_cycles: int = 0
    row_activations: int = 0
    steps: int = 0
    max_step_critical: int = 0

    @property
    def macs(self) -> int:
        return self.macs_spike + self.macs_compress + self.macs_update + self.macs_integration

    @property
    def memory_path_macs(self) -> int:
        """Data-independent MACs of the slow-memory paths (update + integration)."""
        return self.macs_update + self.macs_integration

    @property
    def neuron_rmw_pairs(self) -> int:
        return self.neuron_reads  # reads and writes are always paired here

    @property
    def weight_reads(self) -> int:
        return (
            self.w_ff_reads
            + self.p_reads
            + self.v_reads
            + self.w_comp_reads
            + self.a_bar_reads
            + self.b_bar_reads
        )

    @property
    def sram_words(self) -> int:
        return self.neuron_reads + self.neuron_writes + self.weight_reads

    def arithmetic_intensity(self) -> float:
        return self.macs / self.sram_words if self.sram_words else 0.0

    def energy(self, cost: CostModel) -> float:
        reads = self.neuron_reads + self.weight_reads
        return (
            reads * cost.sram_read
            + self.neuron_writes * cost.sram_write
            + self.macs * cost.mac
            + self.register_accesses * cost.register
        )

    def add(self, other: "AccessLedger") -> "AccessLedger":
        for name in _COUNTERS:
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.max_step_critical = max(self.max_step_critical, other.max_step_critical)
        return self

    def as_dict(self) -> dict:
        out = {name: int(getattr(self, name)) for name in _COUNTERS}
        out["max_step_critical"] = int(self.max_step_critical)
        out["macs"] = int(self.macs)
        out["memory_path_macs"] = int(self.memory_path_macs)
        out["neuron_rmw_pairs"] = int(self.neuron_rmw_pairs)
        out["sram_words"] = int(self.sram_words)
        return out


def _step_counts(
    nnz: int, dims: tuple[int, int, int], sched: ScheduleConfig, cost: CostModel, update: bool
) -> AccessLedger:
    m_in, n, d = dims
    led = AccessLedger(steps=1)
    has_mem = d > 0 and update

    # spike-integration path
    led.macs_spike = nnz * n
    led.spike_cycles = nnz * n
    if sched.stationarity == "uniform-output":
        led.w_ff_reads = m_in * n
        led.row_activations = m_in * -(-n // cost.words_per_row)
    else:
        led.w_ff_reads = nnz * n
        led.row_activations = nnz * -(-n // cost.words_per_row)

    # slow-memory paths run on update steps only
    if has_mem:
        led.macs_compress = nnz
        led.w_comp_reads = m_in if sched.stationarity == "uniform-output" else nnz
        led.macs_update = d * d + d
        led.update_cycles = d * d + d
        led.a_bar_reads = d * d
        led.b_bar_reads = d
        led.macs_integration = n * d + (n if sched.dependency_breaking else 0)
        led.integration_cycles = n * d
        led.p_reads = n * d
        led.v_reads = n if sched.dependency_breaking else 0

    # neuron pass: leak, folded drive term, threshold; one cycle per neuron
    led.neuron_cycles = n
    pairs = n if sched.fusion else 3 * n
    if sched.stationarity == "uniform-input" and has_mem:
        pairs += n * (d + 1)  # dense path re-visits every accumulator per input
    led.neuron_reads = pairs
    led.neuron_writes = pairs

    led.register_accesses = led.macs + (2 * n if sched.fusion else 0) + (2 * d if has_mem else 0)

    mem_chain = (led.update_cycles + led.integration_cycles) if has_mem else 0
    if sched.dependency_breaking:
        core = max(led.spike_cycles, led.integration_cycles, led.update_cycles)
    else:
        core = max(led.spike_cycles, mem_chain)
    led.critical_cycles = core + n
    led.max_step_critical = led.critical_cycles
    return led


def simulate_timestep(
    spike_indices: np.ndarray,
    dims: tuple[int, int, int],
    sched: ScheduleConfig,
    cost: CostModel,
    k: int = 0,
    dilation: int = 1,
) -> AccessLedger:
    """Counters for one layer-timestep given the active presynaptic indices."""
    m_in = dims[0]
    idx = np.asarray(spike_indices, dtype=np.int64)
    if len(idx) and (idx.min() < 0 or idx.max() >= m_in):
        raise TraceMismatchError(f"spike index out of range for {m_in} inputs")
    d_s = sched.dilation if sched.dilation is not None else dilation
    return _step_counts(len(idx), dims, sched, cost, update=(k % d_s == 0))


def simulate_layer(
    nnz: np.ndarray,
    dims: tuple[int, int, int],
    sched: ScheduleConfig,
    cost: CostModel,
    dilation: int = 1,
) -> AccessLedger:
    total = AccessLedger()
    d_s = sched.dilation if sched.dilation is not None else dilation
    for k in range(len(nnz)):
        total.add(_step_counts(int(nnz[k]), dims, sched, cost, update=(k % d_s == 0)))
    return total


def verify_trace(rt: RunTrace, net) -> dict:
    """Recompute the trace dynamics and check them against the recording.

    Returns {"functional_match": bool, "folded_readout_max_err": float}.
    The recomputed membranes and memory must match bit for bit (the schedule
    only reorders counting, never arithmetic); the folded readout form is
    algebraically equal and checked to float tolerance.
    """
    from .network import network_forward

    _, fwd = network_forward(net, rt.inputs)
    match = True
    folded_err = 0.0
    for i, rec in enumerate(fwd.layers):
        match = (
            match
            and np.array_equal(rec.u, rt.u[i])
            and np.array_equal(rec.s, rt.spikes[i])
            and np.array_equal(rec.m, rt.m[i])
        )
        lp = net.layers[i]
        if lp.mem is not None:
            folded = fold_readout(lp.w_mem, lp.mem)
            T = rt.num_steps
            for k in range(0, T, lp.dilation):
                prev = rt.m[i][k - 1] if k > 0 else np.zeros(lp.mem.dim)
                direct = lp.w_mem @ rt.m[i][k]
                split = folded.P @ prev + folded.v * rt.x[i][k]
                folded_err = max(folded_err, float(np.abs(direct - split).max()))
    return {"functional_match": bool(match), "folded_readout_max_err": folded_err}


def simulate_run(
    rt: RunTrace,
    sched: ScheduleConfig,
    cost: CostModel = CostModel(),
    net=None,
) -> dict:
    """Aggregate ledger and report for a whole recorded run.

    Layers execute sequentially; per-layer ledgers are reported alongside the
    total. When ``net`` is given the trace is functionally verified first.
    """
    per_layer = []
    total = AccessLedger()
    for i, lm in enumerate(rt.meta):
        dims = (lm.fan_in, lm.width, lm.mem_dim)
        led = simulate_layer(rt.nnz(i), dims, sched, cost, dilation=lm.dilation)
        per_layer.append(led)
        total.add(led)
    report = {
        "schedule": sched.label(),
        "dilation_override": sched.dilation,
        "counters": total.as_dict(),
        "per_layer": [led.as_dict() for led in per_layer],
        "arithmetic_intensity": total.arithmetic_intensity(),
        "energy_proxy": total.energy(cost),
        "throughput_proxy": rt.num_steps / total.max_step_critical
        if total.max_step_critical
        else 0.0,
    }
    if net is not None:
        report.update(verify_trace(rt, net))
    return report


def default_schedules() -> dict[str, ScheduleConfig]:
    out = {}
    for fusion in (True, False):
        for stat in STATIONARITIES:
            for breaking in (True, False):
                sched = ScheduleConfig(
                    fusion=fusion, stationarity=stat, dependency_breaking=breaking
                )
                out[sched.label()] = sched
    return out


def compare_schedules(
    rt: RunTrace, cost: CostModel = CostModel(), schedules: dict[str, ScheduleConfig] | None = None
) -> list[dict]:
    """Intensity/energy/cycle table over schedules, best intensity first."""
    schedules = schedules if schedules is not None else default_schedules()
    rows = []
    for name, sched in schedules.items():
        report = simulate_run(rt, sched, cost)
        rows.append(
            {
                "schedule": name,
                "arithmetic_intensity": report["arithmetic_intensity"],
                "energy_proxy": report["energy_proxy"],
                "critical_cycles": report["counters"]["critical_cycles"],
                "sram_words": report["counters"]["sram_words"],
                "macs": report["counters"]["macs"],
            }
        )
    rows.sort(key=lambda r: -r["arithmetic_intensity"])
    return rows


_PRESETS = {
    "fused": {},
    "unfused": {"fusion": False},
    "serial": {"dependency_breaking": False},
}


def parse_schedule(text: str) -> ScheduleConfig:
    """Parse 'fused+heterogeneous+broken'-style labels (parts optional)."""
    kwargs: dict = {}
    for part in text.split("+"):
        part = part.strip()
        if part in ("fused", "unfused"):
            kwargs["fusion"] = part == "fused"
        elif part in ("broken", "serial"):
            kwargs["dependency_breaking"] = part == "broken"
        elif part in STATIONARITIES:
            kwargs["stationarity"] = part
        elif part.startswith("d_s="):
            kwargs["dilation"] = int(part[4:])
        elif part:
            raise ConfigError(f"unknown schedule token {part!r}")
    return ScheduleConfig(**kwargs)
