"""Training loop: batched surrogate BPTT with deterministic bookkeeping.

Batch gradients are accumulated in sample order and losses are reduced in a
fixed order, so a (seed, config) pair fully determines every emitted metric.
Wall-clock time is reported on the result object only and never written into
metric records, keeping output files byte-reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .backprop import backward, softmax_cross_entropy
from .errors import ConfigError, DivergenceError
from .network import Network, logits_for_mode, named_parameters, network_forward
from .optim import Adam, AdamConfig
from .surrogate import SurrogateSpec

Sample = tuple[np.ndarray, int]  # ((T, M) drive, label)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 64
    lr: float = 1e-3
    cosine_decay: bool = True
    surrogate: SurrogateSpec = field(default_factory=SurrogateSpec)
    freeze: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


@dataclass
class TrainResult:
    records: list[dict]  # one per (epoch, split)
    wall_time_s: float


def evaluate(
    net: Network, dataset: list[Sample], loss_mode: str | None = None, threads: int = 1
):
    """Mean loss and accuracy over a dataset, reduced in index order.

    With threads > 1 samples are scored concurrently (parameters are only
    read); the reduction order stays fixed, so results do not depend on the
    thread count.
    """
    loss_mode = loss_mode if loss_mode is not None else net.cfg.loss_mode

    def score(item: Sample):
        x, label = item
        _, trace = network_forward(net, x)
        logits = logits_for_mode(trace, loss_mode)
        loss, _ = softmax_cross_entropy(logits, label)
        return loss, int(np.argmax(logits) == label)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            scored = list(pool.map(score, dataset))
    else:
        scored = [score(item) for item in dataset]
    losses = np.array([s[0] for s in scored])
    correct = sum(s[1] for s in scored)
    n = max(len(dataset), 1)
    return float(losses.sum() / n), correct / n


def _batch_gradients(net: Network, batch: list[Sample], surrogate: SurrogateSpec):
    names = [name for name, _ in named_parameters(net)]
    total = {name: None for name in names}
    losses = np.zeros(len(batch))
    for i, (x, label) in enumerate(batch):
        _, trace = network_forward(net, x, surrogate=surrogate)
        tape = backward(net, trace, label, surrogate=surrogate)
        losses[i] = tape.loss
        for name in names:
            g = tape.grads[name]
            total[name] = g if total[name] is None else total[name] + g
    scale = 1.0 / len(batch)
    return {name: g * scale for name, g in total.items()}, losses


def train(
    net: Network,
    train_set: list[Sample],
    eval_sets: dict[str, list[Sample]],
    cfg: TrainConfig,
    seed: int,
) -> TrainResult:
    """Train in place; returns per-epoch metric records.

    Raises DivergenceError as soon as any sample loss becomes non-finite.
    """
    if not train_set:
        raise ConfigError("training set is empty")
    t0 = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    n = len(train_set)
    steps_per_epoch = -(-n // cfg.batch_size)
    opt = Adam(
        named_parameters(net),
        AdamConfig(lr=cfg.lr, cosine_decay=cfg.cosine_decay),
        total_steps=cfg.epochs * steps_per_epoch,
        frozen=cfg.freeze,
    )
    records: list[dict] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for b in range(steps_per_epoch):
            idx = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            batch = [train_set[i] for i in idx]
            grads, losses = _batch_gradients(net, batch, cfg.surrogate)
            if not np.all(np.isfinite(losses)):
                raise DivergenceError(
                    f"non-finite training loss at epoch {epoch}, batch {b}"
                )
            opt.step(grads)
        # training accuracy measured on the post-epoch weights
        train_loss, train_acc = evaluate(net, train_set)
        records.append(
            {"epoch": epoch, "split": "train", "loss": train_loss, "accuracy": train_acc}
        )
        for split, data in eval_sets.items():
            loss, acc = evaluate(net, data)
            records.append({"epoch": epoch, "split": split, "loss": loss, "accuracy": acc})
    return TrainResult(records=records, wall_time_s=time.perf_counter() - t0)
