import numpy as np
import pytest

from dualmem.errors import ConfigError, DimensionError
from dualmem.network import (
    LayerSpec,
    NetworkConfig,
    config_from_dict,
    config_to_dict,
    count_parameters,
    default_memory_dim,
    init_network,
    load_checkpoint,
    named_parameters,
    network_forward,
    save_checkpoint,
)


def small_cfg(**over):
    base = dict(
        input_channels=6,
        outputs=3,
        hidden=(LayerSpec(size=10, variant="memory", mem_dim=4, window=16),),
    )
    base.update(over)
    return NetworkConfig(**base)


def spikes(T, M, seed=0, p=0.3):
    rng = np.random.default_rng(seed)
    return (rng.random((T, M)) < p).astype(float)


class TestForward:
    def test_zero_input_zero_logits(self):
        net = init_network(small_cfg(), seed=0)
        logits, _ = network_forward(net, np.zeros((15, 6)))
        np.testing.assert_array_equal(logits, np.zeros(3))

    def test_single_step_logits_equal_readout_membrane(self):
        net = init_network(small_cfg(), seed=1)
        logits, trace = network_forward(net, spikes(1, 6, seed=2, p=0.9))
        np.testing.assert_array_equal(logits, trace.layers[-1].u[0])

    def test_deterministic_across_runs(self):
        x = spikes(40, 6, seed=3)
        a, _ = network_forward(init_network(small_cfg(), seed=4), x)
        b, _ = network_forward(init_network(small_cfg(), seed=4), x)
        np.testing.assert_array_equal(a, b)

    def test_width_mismatch_rejected(self):
        net = init_network(small_cfg(), seed=0)
        with pytest.raises(DimensionError):
            network_forward(net, np.zeros((10, 7)))

    def test_causality(self):
        # output up to step k must not depend on inputs after k
        net = init_network(small_cfg(), seed=5)
        x = spikes(30, 6, seed=6)
        _, base = network_forward(net, x)
        x2 = x.copy()
        x2[20:] = 1.0 - x2[20:]
        _, pert = network_forward(net, x2)
        for rec_a, rec_b in zip(base.layers, pert.layers):
            np.testing.assert_array_equal(rec_a.s[:20], rec_b.s[:20])
            np.testing.assert_array_equal(rec_a.u[:20], rec_b.u[:20])
        assert not np.array_equal(base.layers[-1].u[20:], pert.layers[-1].u[20:])

    def test_high_threshold_config_still_fires(self):
        # init scales with the threshold, so a threshold of 10 keeps the same
        # firing statistics as the unit-threshold default
        cfg = small_cfg(
            hidden=(LayerSpec(size=10, variant="memory", mem_dim=4, window=16, threshold=10.0),)
        )
        net = init_network(cfg, seed=3)
        _, trace = network_forward(net, spikes(50, 6, seed=4))
        assert trace.layers[0].s.sum() > 10

    def test_memoryless_variant_bitwise_matches_plain(self):
        # mem_dim=0 degenerates to a plain layer, same draws, same arithmetic
        x = spikes(50, 6, seed=7)
        cfg_mem = small_cfg(hidden=(LayerSpec(size=10, variant="memory", mem_dim=0),))
        cfg_plain = small_cfg(hidden=(LayerSpec(size=10, variant="plain"),))
        a, ta = network_forward(init_network(cfg_mem, seed=8), x)
        b, tb = network_forward(init_network(cfg_plain, seed=8), x)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(ta.layers[0].s, tb.layers[0].s)


class TestParameterCount:
    def test_closed_form_two_memory_layers(self):
        # per memory layer: N*M + N*d + M + 1; classifier: C*N
        cfg = NetworkConfig(
            input_channels=140,
            outputs=20,
            hidden=(
                LayerSpec(size=128, variant="memory", mem_dim=10, window=40),
                LayerSpec(size=128, variant="memory", mem_dim=10, window=40),
            ),
        )
        net = init_network(cfg, seed=0)
        expected = (
            (128 * 140 + 128 * 10 + 140 + 1)
            + (128 * 128 + 128 * 10 + 128 + 1)
            + 20 * 128
        )
        assert count_parameters(net) == expected == 39694

    def test_default_memory_dim_small_fraction(self):
        assert default_memory_dim(128) == 10
        for n in [16, 64, 200, 512]:
            d = default_memory_dim(n)
            assert 1 <= d <= max(1, int(np.ceil(0.10 * n)))


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        cfg = NetworkConfig(
            input_channels=6,
            outputs=3,
            hidden=(
                LayerSpec(size=10, variant="memory", mem_dim=4, window=16),
                LayerSpec(size=8, variant="delay", max_delay=5),
            ),
        )
        net = init_network(cfg, seed=9)
        prefix = tmp_path / "model"
        save_checkpoint(net, prefix)
        loaded = load_checkpoint(prefix)
        for (na, ta), (nb, tb) in zip(named_parameters(net), named_parameters(loaded)):
            assert na == nb
            np.testing.assert_array_equal(ta.astype(np.float32), tb.astype(np.float32))
        np.testing.assert_array_equal(net.layers[1].delays, loaded.layers[1].delays)
        x = spikes(20, 6, seed=10)
        a, _ = network_forward(net, x)
        b, _ = network_forward(loaded, x)
        np.testing.assert_allclose(a, b, atol=1e-4)

    def test_manifest_is_row_major_float32(self, tmp_path):
        import json

        net = init_network(small_cfg(), seed=0)
        save_checkpoint(net, tmp_path / "m")
        manifest = json.loads((tmp_path / "m.json").read_text())
        assert manifest["dtype"] == "float32"
        raw = np.fromfile(tmp_path / "m.bin", dtype=np.float32)
        entry = manifest["tensors"][0]
        w = raw[entry["offset"] : entry["offset"] + entry["size"]].reshape(entry["shape"])
        np.testing.assert_array_equal(w, net.layers[0].w_ff.astype(np.float32))


class TestConfigSchema:
    def test_roundtrip(self):
        cfg = small_cfg()
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_unknown_keys_rejected(self):
        doc = config_to_dict(small_cfg())
        doc["typo"] = 1
        with pytest.raises(ConfigError):
            config_from_dict(doc)
        doc = config_to_dict(small_cfg())
        doc["hidden"][0]["sizee"] = 4
        with pytest.raises(ConfigError):
            config_from_dict(doc)

    def test_invalid_values_rejected(self):
        with pytest.raises(ConfigError):
            NetworkConfig(input_channels=0, outputs=2, hidden=())
        with pytest.raises(ConfigError):
            small_cfg(loss_mode="sum")
        with pytest.raises(ConfigError):
            LayerSpec(size=8, variant="memory", mem_dim=3, window=0)
