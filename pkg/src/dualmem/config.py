"""Strict JSON run-configuration schema (unknown keys are rejected)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .network import NetworkConfig, config_from_dict
from .surrogate import SurrogateSpec
from .training import TrainConfig


def check_keys(doc: dict, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(doc)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


@dataclass(frozen=True)
class TaskConfig:
    kind: str  # "events" | "dense" | "permuted-dense"
    train_path: str
    test_path: str
    permutation_seed: int = 0
    classes: tuple[int, ...] | None = None
    max_per_class: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("events", "dense", "permuted-dense"):
            raise ConfigError(f"task.kind must be events|dense|permuted-dense, got {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    seed: int
    task: TaskConfig
    network: NetworkConfig
    train: TrainConfig
    gradient_profile: bool = False
    emit_trace: bool = False


def parse_run_config(doc: dict) -> RunConfig:
    check_keys(
        doc,
        {"seed", "task", "network", "train", "outputs"},
        {"seed", "task", "network", "train"},
        "run config",
    )
    t = doc["task"]
    check_keys(
        t,
        {"kind", "train_path", "test_path", "permutation_seed", "classes", "max_per_class"},
        {"kind", "train_path", "test_path"},
        "task",
    )
    task = TaskConfig(
        kind=t["kind"],
        train_path=t["train_path"],
        test_path=t["test_path"],
        permutation_seed=int(t.get("permutation_seed", 0)),
        classes=tuple(t["classes"]) if t.get("classes") is not None else None,
        max_per_class=t.get("max_per_class"),
    )
    network = config_from_dict(doc["network"])
    tr = doc["train"]
    check_keys(
        tr,
        {"epochs", "batch_size", "lr", "cosine_decay", "surrogate", "freeze"},
        set(),
        "train",
    )
    surr_doc = tr.get("surrogate", {})
    check_keys(surr_doc, {"kind", "param"}, set(), "train.surrogate")
    surrogate = SurrogateSpec(
        kind=surr_doc.get("kind", "rectangular"), param=float(surr_doc.get("param", 1.0))
    )
    train = TrainConfig(
        epochs=int(tr.get("epochs", 10)),
        batch_size=int(tr.get("batch_size", 64)),
        lr=float(tr.get("lr", 1e-3)),
        cosine_decay=bool(tr.get("cosine_decay", True)),
        surrogate=surrogate,
        freeze=tuple(tr.get("freeze", ())),
    )
    outputs = doc.get("outputs", {})
    check_keys(outputs, {"gradient_profile", "emit_trace"}, set(), "outputs")
    return RunConfig(
        seed=int(doc["seed"]),
        task=task,
        network=network,
        train=train,
        gradient_profile=bool(outputs.get("gradient_profile", False)),
        emit_trace=bool(outputs.get("emit_trace", False)),
    )


def load_run_config(path: str | Path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc
    return parse_run_config(doc)
