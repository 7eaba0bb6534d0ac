import json

import numpy as np
import pytest

from dualmem.data import (
    DenseSequence,
    EventSequence,
    build_permutation,
    encode_samples,
    filter_classes,
    load_dense,
    load_events,
    split_by_id,
    write_dense,
    write_events,
)
from dualmem.errors import DataFormatError


def write_lines(path, docs):
    with open(path, "w") as fh:
        for doc in docs:
            fh.write(json.dumps(doc) + "\n")


class TestLoadEvents:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert load_events(path, cache=False) == []

    def test_single_event_tensor(self, tmp_path):
        path = tmp_path / "one.jsonl"
        write_lines(
            path, [{"id": "a", "label": 2, "T": 10, "channels": 8, "events": [[3, 7]]}]
        )
        seqs = load_events(path, cache=False)
        dense = seqs[0].to_dense()
        assert dense.shape == (10, 8)
        assert dense[3, 7] == 1.0 and dense.sum() == 1.0

    def test_malformed_line_reports_lineno(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "label": 0, "T": 5, "channels": 2, "events": []}\n{oops\n')
        with pytest.raises(DataFormatError, match=r":2"):
            load_events(path, cache=False)

    def test_channel_overflow_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        write_lines(path, [{"id": "a", "label": 0, "T": 5, "channels": 2, "events": [[0, 2]]}])
        with pytest.raises(DataFormatError, match="channel"):
            load_events(path, cache=False)

    def test_timestep_overflow_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        write_lines(path, [{"id": "a", "label": 0, "T": 5, "channels": 2, "events": [[5, 0]]}])
        with pytest.raises(DataFormatError, match="timestep"):
            load_events(path, cache=False)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        write_lines(
            path,
            [{"id": "a", "label": 0, "T": 5, "channels": 2, "events": [], "extra": 1}],
        )
        with pytest.raises(DataFormatError, match="keys"):
            load_events(path, cache=False)

    def test_events_sorted_by_timestep(self, tmp_path):
        path = tmp_path / "unsorted.jsonl"
        write_lines(
            path,
            [{"id": "a", "label": 0, "T": 9, "channels": 3, "events": [[5, 1], [1, 2], [3, 0]]}],
        )
        seqs = load_events(path, cache=False)
        assert list(seqs[0].events[:, 0]) == [1, 3, 5]

    def test_cache_roundtrip_and_invalidation(self, tmp_path):
        path = tmp_path / "d.jsonl"
        docs = [
            {"id": f"s{i}", "label": i % 3, "T": 6, "channels": 4, "events": [[i % 6, i % 4]]}
            for i in range(10)
        ]
        write_lines(path, docs)
        first = load_events(path)
        assert (tmp_path / "d.jsonl.npz").exists()
        second = load_events(path)  # served from cache
        for a, b in zip(first, second):
            assert a.sample_id == b.sample_id and a.label == b.label
            np.testing.assert_array_equal(a.events, b.events)
        # changing the source must invalidate the cache
        docs[0]["label"] = 2
        write_lines(path, docs)
        third = load_events(path)
        assert third[0].label == 2


class TestLoadDense:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "dense.jsonl"
        seqs = [DenseSequence("a", 1, np.linspace(0, 1, 7))]
        write_dense(path, seqs)
        loaded = load_dense(path)
        assert loaded[0].label == 1
        np.testing.assert_allclose(loaded[0].values, seqs[0].values, atol=1e-6)

    def test_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        write_lines(path, [{"id": "a", "label": 0, "T": 2, "values": [0.5, 1.5]}])
        with pytest.raises(DataFormatError, match=r"\[0, 1\]"):
            load_dense(path)

    def test_length_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        write_lines(path, [{"id": "a", "label": 0, "T": 3, "values": [0.5]}])
        with pytest.raises(DataFormatError, match="length"):
            load_dense(path)


class TestEncoders:
    def test_event_tensors_binary(self, tmp_path):
        path = tmp_path / "e.jsonl"
        write_lines(
            path,
            [{"id": "a", "label": 0, "T": 4, "channels": 2, "events": [[0, 0], [0, 0], [1, 1]]}],
        )
        samples = encode_samples(load_events(path, cache=False), encoder="event")
        assert set(np.unique(samples[0][0])) <= {0.0, 1.0}

    def test_permutation_deterministic_and_seed_sensitive(self):
        p1 = build_permutation(50, seed=4)
        p2 = build_permutation(50, seed=4)
        p3 = build_permutation(50, seed=5)
        np.testing.assert_array_equal(p1, p2)
        assert not np.array_equal(p1, p3)

    def test_permuted_encoding_applies_fixed_permutation(self):
        seq = DenseSequence("a", 0, np.linspace(0, 1, 16))
        (x_plain, _), = encode_samples([seq], encoder="dense")
        (x_perm, _), = encode_samples([seq], encoder="permuted-dense", permutation_seed=9)
        perm = build_permutation(16, 9)
        np.testing.assert_array_equal(x_perm, x_plain[perm])


class TestFiltersAndSplits:
    def make(self, n=30):
        return [
            EventSequence(f"id{i}", i % 5, 4, 3, np.zeros((0, 2), dtype=np.int64))
            for i in range(n)
        ]

    def test_class_subset_remapped(self):
        out = filter_classes(self.make(), classes=(3, 1))
        assert {s.label for s in out} == {0, 1}
        assert len(out) == 12

    def test_per_class_cap(self):
        out = filter_classes(self.make(), max_per_class=2)
        labels = [s.label for s in out]
        assert all(labels.count(c) == 2 for c in range(5))

    def test_split_disjoint_by_id(self):
        seqs = self.make(40)
        splits = split_by_id(seqs, {"train": 0.7, "test": 0.3}, seed=0)
        train_ids = {s.sample_id for s in splits["train"]}
        test_ids = {s.sample_id for s in splits["test"]}
        assert not (train_ids & test_ids)
        assert len(train_ids) + len(test_ids) == 40

    def test_write_events_roundtrip(self, tmp_path):
        seqs = [
            EventSequence("a", 1, 5, 3, np.array([[0, 1], [4, 2]], dtype=np.int64)),
            EventSequence("b", 0, 5, 3, np.zeros((0, 2), dtype=np.int64)),
        ]
        path = tmp_path / "rt.jsonl"
        write_events(path, seqs)
        loaded = load_events(path, cache=False)
        assert [s.sample_id for s in loaded] == ["a", "b"]
        np.testing.assert_array_equal(loaded[0].events, seqs[0].events)
