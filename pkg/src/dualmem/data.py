"""Dataset types and JSONL ingestion.

Event files hold one sample per line:
    {"id": str, "label": int, "T": int, "channels": int, "events": [[k, ch], ...]}
Dense files replace "channels"/"events" with "values": [...] in [0, 1].
A packed ``<file>.npz`` cache keyed on the source digest is written on first
load and reused while the source is unchanged.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError

_CACHE_VERSION = 1


@dataclass
class EventSequence:
    """One sparse spike-stream sample."""

    sample_id: str
    label: int
    num_steps: int
    channels: int
    events: np.ndarray  # (n, 2) int64 rows of (timestep, channel), sorted by timestep

    def to_dense(self) -> np.ndarray:
        """Binary (T, channels) tensor; repeated events clamp to 1."""
        out = np.zeros((self.num_steps, self.channels))
        if len(self.events):
            out[self.events[:, 0], self.events[:, 1]] = 1.0
        return out


@dataclass
class DenseSequence:
    """One real-valued single-channel sample, values in [0, 1]."""

    sample_id: str
    label: int
    values: np.ndarray  # (T,)

    @property
    def num_steps(self) -> int:
        return len(self.values)

    def to_dense(self) -> np.ndarray:
        return self.values.reshape(-1, 1)


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_event_line(doc: dict, where: str) -> EventSequence:
    required = {"id", "label", "T", "channels", "events"}
    if set(doc) != required:
        raise DataFormatError(f"{where}: keys must be exactly {sorted(required)}")
    T, channels = int(doc["T"]), int(doc["channels"])
    if T < 1 or channels < 1:
        raise DataFormatError(f"{where}: T and channels must be >= 1")
    ev = np.asarray(doc["events"], dtype=np.int64).reshape(-1, 2)
    if len(ev):
        if ev[:, 0].min() < 0 or ev[:, 0].max() >= T:
            raise DataFormatError(f"{where}: event timestep out of [0, {T})")
        if ev[:, 1].min() < 0 or ev[:, 1].max() >= channels:
            raise DataFormatError(f"{where}: event channel out of [0, {channels})")
        ev = ev[np.argsort(ev[:, 0], kind="stable")]
    return EventSequence(
        sample_id=str(doc["id"]),
        label=int(doc["label"]),
        num_steps=T,
        channels=channels,
        events=ev,
    )


def _load_jsonl(path: Path):
    for lineno, line in enumerate(open(path), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc


def load_events(path: str | Path, cache: bool = True) -> list[EventSequence]:
    """Load and validate an event JSONL file, in file order."""
    path = Path(path)
    if cache:
        cached = _read_event_cache(path)
        if cached is not None:
            return cached
    out = []
    for lineno, doc in _load_jsonl(path):
        if not isinstance(doc, dict):
            raise DataFormatError(f"{path}:{lineno}: expected an object per line")
        out.append(_parse_event_line(doc, f"{path}:{lineno}"))
    if cache:
        _write_event_cache(path, out)
    return out


def load_dense(path: str | Path) -> list[DenseSequence]:
    out = []
    for lineno, doc in _load_jsonl(path):
        required = {"id", "label", "T", "values"}
        if set(doc) != required:
            raise DataFormatError(f"{path}:{lineno}: keys must be exactly {sorted(required)}")
        values = np.asarray(doc["values"], dtype=np.float64)
        if len(values) != int(doc["T"]):
            raise DataFormatError(f"{path}:{lineno}: values length != T")
        if values.min() < 0.0 or values.max() > 1.0:
            raise DataFormatError(f"{path}:{lineno}: values must lie in [0, 1]")
        out.append(DenseSequence(sample_id=str(doc["id"]), label=int(doc["label"]), values=values))
    return out


def write_events(path: str | Path, seqs: list[EventSequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for s in seqs:
            fh.write(
                json.dumps(
                    {
                        "id": s.sample_id,
                        "label": int(s.label),
                        "T": int(s.num_steps),
                        "channels": int(s.channels),
                        "events": [[int(k), int(c)] for k, c in s.events],
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def write_dense(path: str | Path, seqs: list[DenseSequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for s in seqs:
            fh.write(
                json.dumps(
                    {
                        "id": s.sample_id,
                        "label": int(s.label),
                        "T": int(s.num_steps),
                        "values": [round(float(v), 6) for v in s.values],
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def _cache_path(path: Path) -> Path:
    return path.with_name(path.name + ".npz")


def _read_event_cache(path: Path) -> list[EventSequence] | None:
    cp = _cache_path(path)
    if not cp.exists():
        return None
    try:
        blob = np.load(cp, allow_pickle=False)
        if int(blob["version"]) != _CACHE_VERSION or str(blob["digest"]) != _digest(path):
            return None
        flat = blob["events"]
        offsets = blob["offsets"]
        out = []
        for i, sid in enumerate(blob["ids"]):
            out.append(
                EventSequence(
                    sample_id=str(sid),
                    label=int(blob["labels"][i]),
                    num_steps=int(blob["steps"][i]),
                    channels=int(blob["channels"][i]),
                    events=flat[offsets[i] : offsets[i + 1]].copy(),
                )
            )
        return out
    except (KeyError, ValueError, OSError):
        return None


def _write_event_cache(path: Path, seqs: list[EventSequence]) -> None:
    offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
    for i, s in enumerate(seqs):
        offsets[i + 1] = offsets[i] + len(s.events)
    flat = (
        np.concatenate([s.events for s in seqs]) if seqs else np.zeros((0, 2), dtype=np.int64)
    )
    try:
        np.savez(
            _cache_path(path),
            version=_CACHE_VERSION,
            digest=_digest(path),
            events=flat,
            offsets=offsets,
            ids=np.array([s.sample_id for s in seqs]),
            labels=np.array([s.label for s in seqs], dtype=np.int64),
            steps=np.array([s.num_steps for s in seqs], dtype=np.int64),
            channels=np.array([s.channels for s in seqs], dtype=np.int64),
        )
    except OSError:
        pass  # read-only data dir; caching is best-effort


def build_permutation(num_steps: int, seed: int) -> np.ndarray:
    """Fixed timestep permutation for the permuted-dense encoder."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    return rng.permutation(num_steps)


def encode_samples(
    seqs, encoder: str = "event", permutation_seed: int = 0
) -> list[tuple[np.ndarray, int]]:
    """Materialize (drive, label) pairs for training.

    encoder "event" densifies spike streams; "dense" injects values as analog
    current on one channel; "permuted-dense" additionally applies a fixed
    timestep permutation.
    """
    out = []
    perm = None
    for s in seqs:
        x = s.to_dense()
        if encoder == "permuted-dense":
            if perm is None or len(perm) != x.shape[0]:
                perm = build_permutation(x.shape[0], permutation_seed)
            x = x[perm]
        elif encoder not in ("event", "dense"):
            raise DataFormatError(f"unknown encoder {encoder!r}")
        out.append((np.ascontiguousarray(x), int(s.label)))
    return out


def filter_classes(seqs, classes=None, max_per_class=None):
    """Optionally restrict to a class subset and cap per-class counts.

    Class labels are remapped to 0..len(classes)-1 in the given order.
    """
    if classes is not None:
        remap = {c: i for i, c in enumerate(classes)}
    counts: dict[int, int] = {}
    out = []
    for s in seqs:
        label = s.label
        if classes is not None:
            if label not in remap:
                continue
            label = remap[label]
        if max_per_class is not None:
            if counts.get(label, 0) >= max_per_class:
                continue
            counts[label] = counts.get(label, 0) + 1
        if label != s.label:
            s = type(s)(**{**s.__dict__, "label": label})
        out.append(s)
    return out


def split_by_id(seqs, fractions: dict[str, float], seed: int):
    """Disjoint splits keyed by sample id (samples sharing an id stay together)."""
    ids = sorted({s.sample_id for s in seqs})
    rng = np.random.default_rng(np.random.SeedSequence([seed, 4]))
    rng.shuffle(ids)
    total = sum(fractions.values())
    splits: dict[str, set] = {}
    start = 0
    names = list(fractions)
    for i, name in enumerate(names):
        count = int(round(len(ids) * fractions[name] / total))
        end = len(ids) if i == len(names) - 1 else min(start + count, len(ids))
        splits[name] = set(ids[start:end])
        start = end
    return {name: [s for s in seqs if s.sample_id in members] for name, members in splits.items()}
