import numpy as np
import pytest

from dualmem.errors import ConfigError, TraceMismatchError
from dualmem.hwsim import (
    AccessLedger,
    CostModel,
    ScheduleConfig,
    compare_schedules,
    default_schedules,
    parse_schedule,
    simulate_layer,
    simulate_run,
    simulate_timestep,
    verify_trace,
)
from dualmem.network import LayerSpec, NetworkConfig, init_network, network_forward
from dualmem.trace import from_forward, load_trace, save_trace


def random_nnz(T, M, seed=0, p=0.3):
    rng = np.random.default_rng(seed)
    return rng.binomial(M, p, size=T).astype(np.int64)


def memory_trace(T=50, M=12, N=16, d=5, dilation=1, seed=0):
    cfg = NetworkConfig(
        input_channels=M,
        outputs=4,
        hidden=(LayerSpec(size=N, variant="memory", mem_dim=d, window=4 * d, dilation=dilation),),
    )
    net = init_network(cfg, seed=seed)
    rng = np.random.default_rng(seed + 1)
    x = (rng.random((T, M)) < 0.3).astype(float)
    _, fwd = network_forward(net, x)
    return from_forward(fwd, net), net


class TestStepCounts:
    dims = (12, 16, 5)  # (M, N, d)

    def test_empty_step_fused(self):
        led = simulate_timestep(np.zeros(0), self.dims, ScheduleConfig(), CostModel())
        assert led.w_ff_reads == 0
        assert led.neuron_rmw_pairs == 16  # leak + memory pass still sweeps neurons
        assert led.macs_spike == 0

    def test_spike_index_validated(self):
        with pytest.raises(TraceMismatchError):
            simulate_timestep(np.array([12]), self.dims, ScheduleConfig(), CostModel())

    def test_fused_vs_unfused_pairs(self):
        sched_f = ScheduleConfig(fusion=True)
        sched_u = ScheduleConfig(fusion=False)
        a = simulate_timestep(np.arange(4), self.dims, sched_f, CostModel())
        b = simulate_timestep(np.arange(4), self.dims, sched_u, CostModel())
        assert a.neuron_rmw_pairs == 16
        assert b.neuron_rmw_pairs == 48
        # fusion changes neuron-SRAM and register counters only
        assert a.macs == b.macs
        assert a.weight_reads == b.weight_reads
        assert a.register_accesses != b.register_accesses

    def test_reference_fusion_counts_128_neurons_100_steps(self):
        # 128 neurons over 100 steps: 12,800 fused pairs, 38,400 unfused
        nnz = random_nnz(100, 20, seed=2)
        dims = (20, 128, 10)
        fused = simulate_layer(nnz, dims, ScheduleConfig(fusion=True), CostModel())
        unfused = simulate_layer(nnz, dims, ScheduleConfig(fusion=False), CostModel())
        assert fused.neuron_rmw_pairs == 12_800
        assert unfused.neuron_rmw_pairs == 38_400
        assert unfused.neuron_rmw_pairs / fused.neuron_rmw_pairs == 3.0

    def test_heterogeneous_weight_reads_follow_spikes(self):
        nnz = random_nnz(40, 12, seed=3)
        led = simulate_layer(nnz, self.dims, ScheduleConfig(), CostModel())
        assert led.w_ff_reads == int(nnz.sum()) * 16

    def test_uniform_output_weight_reads_ignore_sparsity(self):
        for p in (0.05, 0.5, 0.95):
            nnz = random_nnz(40, 12, seed=4, p=p)
            led = simulate_layer(
                nnz, self.dims, ScheduleConfig(stationarity="uniform-output"), CostModel()
            )
            assert led.w_ff_reads == 12 * 16 * 40

    def test_readout_matrix_reads_per_update(self):
        T, d_s = 40, 3
        nnz = random_nnz(T, 12, seed=5)
        led = simulate_layer(nnz, self.dims, ScheduleConfig(), CostModel(), dilation=d_s)
        updates = -(-T // d_s)
        assert led.p_reads + led.v_reads == 16 * (5 + 1) * updates

    def test_memory_path_macs_scale_with_dilation(self):
        T = 100
        nnz = random_nnz(T, 12, seed=6)
        base = simulate_layer(nnz, self.dims, ScheduleConfig(dilation=1), CostModel())
        for d_s in (2, 5, 10):
            led = simulate_layer(nnz, self.dims, ScheduleConfig(dilation=d_s), CostModel())
            expected = base.memory_path_macs * (-(-T // d_s)) / T
            assert led.memory_path_macs == expected

    def test_critical_path_formulas(self):
        # dense memory path dominating the spike path
        for n, d in [(8, 4), (128, 10)]:
            dims = (4, n, d)
            broken = simulate_timestep(np.zeros(1), dims, ScheduleConfig(), CostModel())
            serial = simulate_timestep(
                np.zeros(1), dims, ScheduleConfig(dependency_breaking=False), CostModel()
            )
            assert broken.critical_cycles == max(n * d, d * d + d) + n
            assert serial.critical_cycles == d * d + d + n * d + n
            assert broken.critical_cycles < serial.critical_cycles

    def test_zero_cost_model_zeroes_energy_not_counters(self):
        zero = CostModel(sram_read=0, sram_write=0, mac=0, register=0)
        nnz = random_nnz(20, 12, seed=7)
        led = simulate_layer(nnz, self.dims, ScheduleConfig(), zero)
        ref = simulate_layer(nnz, self.dims, ScheduleConfig(), CostModel())
        assert led.energy(zero) == 0.0
        assert led.as_dict() == ref.as_dict()

    def test_monotone_weight_reads_in_density(self):
        dims = self.dims
        reads = []
        for nnz_val in range(13):
            led = simulate_timestep(np.arange(nnz_val), dims, ScheduleConfig(), CostModel())
            reads.append(led.w_ff_reads)
        assert all(a <= b for a, b in zip(reads, reads[1:]))

    def test_determinism(self):
        nnz = random_nnz(30, 12, seed=8)
        a = simulate_layer(nnz, self.dims, ScheduleConfig(), CostModel()).as_dict()
        b = simulate_layer(nnz, self.dims, ScheduleConfig(), CostModel()).as_dict()
        assert a == b


class TestRunLevel:
    def test_fusion_ratio_exactly_three(self):
        rt, _ = memory_trace()
        fused = simulate_run(rt, parse_schedule("fused"))
        unfused = simulate_run(rt, parse_schedule("unfused"))
        a = fused["counters"]["neuron_rmw_pairs"]
        b = unfused["counters"]["neuron_rmw_pairs"]
        assert b / a == 3.0
        total_width = sum(m.width for m in rt.meta)
        assert a == total_width * rt.num_steps

    def test_functional_verification_bitwise(self):
        rt, net = memory_trace(dilation=2)
        report = simulate_run(rt, ScheduleConfig(), net=net)
        assert report["functional_match"] is True
        assert report["folded_readout_max_err"] < 1e-10

    def test_verification_detects_tampering(self):
        rt, net = memory_trace()
        rt.u[0][3, 2] += 1e-9
        assert verify_trace(rt, net)["functional_match"] is False

    def test_trace_roundtrip(self, tmp_path):
        rt, _ = memory_trace()
        save_trace(rt, tmp_path / "t.trace")
        rt2 = load_trace(tmp_path / "t.trace")
        assert rt2.num_steps == rt.num_steps
        for i in range(len(rt.meta)):
            np.testing.assert_array_equal(rt2.spikes[i], rt.spikes[i])
            np.testing.assert_array_equal(rt2.u[i], rt.u[i])
            np.testing.assert_array_equal(rt2.m[i], rt.m[i])
        np.testing.assert_array_equal(rt2.inputs, rt.inputs)

    def test_best_schedule_dominates_intensity(self):
        rt, _ = memory_trace(T=60, seed=3)
        rows = compare_schedules(rt)
        best = rows[0]
        assert best["schedule"] == "fused+heterogeneous+broken"
        for row in rows[1:]:
            assert best["arithmetic_intensity"] > row["arithmetic_intensity"]

    def test_empty_trace_equalizes_spike_path(self):
        cfg = NetworkConfig(
            input_channels=6,
            outputs=3,
            hidden=(LayerSpec(size=8, variant="memory", mem_dim=3, window=12),),
        )
        net = init_network(cfg, seed=0)
        _, fwd = network_forward(net, np.zeros((25, 6)))
        rt = from_forward(fwd, net)
        reports = {
            name: simulate_run(rt, sched)["counters"]
            for name, sched in default_schedules().items()
        }
        spike_counters = {
            name: (c["macs_spike"], c["spike_cycles"]) for name, c in reports.items()
        }
        assert len(set(spike_counters.values())) == 1
        assert next(iter(spike_counters.values())) == (0, 0)

    def test_throughput_uses_worst_step(self):
        rt, _ = memory_trace(T=30)
        report = simulate_run(rt, ScheduleConfig())
        assert report["throughput_proxy"] == 30 / report["counters"]["max_step_critical"]


class TestConfigs:
    def test_schedule_parsing(self):
        sched = parse_schedule("unfused+uniform-output+serial+d_s=4")
        assert sched == ScheduleConfig(
            fusion=False, stationarity="uniform-output", dependency_breaking=False, dilation=4
        )
        with pytest.raises(ConfigError):
            parse_schedule("fused+bogus")

    def test_cost_model_validation(self):
        with pytest.raises(ConfigError):
            CostModel(sram_read=-1)
        with pytest.raises(ConfigError):
            CostModel(words_per_row=0)

    def test_ledger_addition(self):
        a = AccessLedger(macs_spike=3, neuron_reads=2, steps=1, max_step_critical=5)
        b = AccessLedger(macs_spike=4, neuron_reads=1, steps=1, max_step_critical=7)
        a.add(b)
        assert a.macs_spike == 7 and a.neuron_reads == 3 and a.steps == 2
        assert a.max_step_critical == 7
