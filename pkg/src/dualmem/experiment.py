"""Experiment harness: config in, deterministic artifact files out.

Every file under the output directory is a pure function of (config, seed):
JSON is written with sorted keys and metrics records carry no wall-clock
fields (timing goes to stderr via the CLI instead).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .backprop import gradient_profile
from .config import RunConfig, TaskConfig
from .data import encode_samples, filter_classes, load_dense, load_events
from .errors import ConfigError
from .network import count_parameters, init_network, network_forward, save_checkpoint
from .trace import from_forward, save_trace
from .training import train


def load_task_samples(task: TaskConfig):
    """Load and encode (drive, label) sample lists for both splits."""
    loader = load_events if task.kind == "events" else load_dense
    encoder = "event" if task.kind == "events" else task.kind
    splits = []
    for path in (task.train_path, task.test_path):
        seqs = loader(path)
        seqs = filter_classes(seqs, task.classes, task.max_per_class)
        if not seqs:
            raise ConfigError(f"no samples left in {path} after filtering")
        splits.append(
            encode_samples(seqs, encoder=encoder, permutation_seed=task.permutation_seed)
        )
    return splits[0], splits[1]


def write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_metrics(path: Path, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_profile_csv(path: Path, profile: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("k,norm\n")
        for k, v in enumerate(profile):
            fh.write(f"{k},{v!r}\n")


def run_experiment(cfg: RunConfig, out_dir: str | Path) -> dict:
    """Train per config and write metrics, checkpoint, and summary files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_set, test_set = load_task_samples(cfg.task)
    channels = train_set[0][0].shape[1]
    if channels != cfg.network.input_channels:
        raise ConfigError(
            f"network expects {cfg.network.input_channels} channels, data has {channels}"
        )
    net = init_network(cfg.network, seed=cfg.seed)
    result = train(net, train_set, {"test": test_set}, cfg.train, seed=cfg.seed)
    write_metrics(out / "metrics.jsonl", result.records)
    save_checkpoint(net, out / "model")
    final = {}
    for rec in result.records:
        final[rec["split"]] = {"loss": rec["loss"], "accuracy": rec["accuracy"]}
    summary = {
        "seed": cfg.seed,
        "epochs": cfg.train.epochs,
        "parameter_count": count_parameters(net),
        "final": final,
        "train_samples": len(train_set),
        "test_samples": len(test_set),
    }
    if cfg.gradient_profile:
        x, label = test_set[0]
        profile = gradient_profile(net, x, label, surrogate=cfg.train.surrogate)
        write_profile_csv(out / "grad_profile.csv", profile)
    if cfg.emit_trace:
        _, fwd = network_forward(net, test_set[0][0])
        save_trace(from_forward(fwd, net), out / "sample0.trace")
    write_json(out / "summary.json", summary)
    return {**summary, "wall_time_s": result.wall_time_s}
