#!/usr/bin/env python3
"""Convert an SHD/SSC-style HDF5 spike archive to JSONL event files.

The archive layout is the public one: variable-length ``spikes/times``
(seconds) and ``spikes/units`` (0..699) per sample, plus a ``labels`` array.
Each spike is mapped to a (time bin, channel group) token:

    bin   = floor(t / duration * n_bins), clamped to the last bin
    group = unit // channel_groups

With ``--binarize`` a cell emits at most one event; otherwise every source
spike emits exactly one token, so event counts are conserved. Output lines
follow the dualmem event schema:

    {"id": ..., "label": ..., "T": n_bins, "channels": 700/groups, "events": [[k, ch], ...]}

Runs once, offline; the training package never links HDF5.
"""

from __future__ import annotations

import argparse
import json
import sys

import h5py
import numpy as np


class SchemaError(ValueError):
    pass


def convert(
    in_path: str,
    out_path: str,
    channel_groups: int = 5,
    n_bins: int = 100,
    binarize: bool = False,
    duration: float | None = None,
    source_channels: int = 700,
) -> dict:
    """Stream-convert one archive; returns the summary dict."""
    if source_channels % channel_groups != 0:
        raise SchemaError(
            f"{source_channels} channels do not divide into groups of {channel_groups}"
        )
    if n_bins < 1:
        raise SchemaError(f"n_bins must be >= 1, got {n_bins}")
    channels = source_channels // channel_groups
    with h5py.File(in_path, "r") as archive:
        for key in ("spikes/times", "spikes/units", "labels"):
            if key not in archive:
                raise SchemaError(f"{in_path}: missing dataset {key!r}")
        times = archive["spikes/times"]
        units = archive["spikes/units"]
        labels = np.asarray(archive["labels"], dtype=np.int64)
        if len(times) != len(labels) or len(units) != len(labels):
            raise SchemaError(f"{in_path}: times/units/labels lengths disagree")
        if duration is None:
            duration = 0.0
            for t in times:
                if len(t):
                    duration = max(duration, float(np.max(t)))
            if duration <= 0.0:
                duration = 1.0
        events_in = 0
        events_out = 0
        histogram: dict[int, int] = {}
        with open(out_path, "w") as out:
            for i in range(len(labels)):
                t = np.asarray(times[i], dtype=np.float64)
                u = np.asarray(units[i], dtype=np.int64)
                if len(t) != len(u):
                    raise SchemaError(f"{in_path}: sample {i} times/units length mismatch")
                if len(u) and (u.min() < 0 or u.max() >= source_channels):
                    raise SchemaError(
                        f"{in_path}: sample {i} unit id outside [0, {source_channels})"
                    )
                events_in += len(t)
                bins = np.minimum((t / duration * n_bins).astype(np.int64), n_bins - 1)
                bins = np.maximum(bins, 0)
                groups = u // channel_groups
                pairs = np.stack([bins, groups], axis=1) if len(t) else np.zeros((0, 2), np.int64)
                if binarize and len(pairs):
                    pairs = np.unique(pairs, axis=0)
                order = np.lexsort((pairs[:, 1], pairs[:, 0])) if len(pairs) else []
                pairs = pairs[order] if len(pairs) else pairs
                events_out += len(pairs)
                label = int(labels[i])
                histogram[label] = histogram.get(label, 0) + 1
                out.write(
                    json.dumps(
                        {
                            "id": f"sample-{i:06d}",
                            "label": label,
                            "T": n_bins,
                            "channels": channels,
                            "events": [[int(k), int(c)] for k, c in pairs],
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
    return {
        "samples": int(len(labels)),
        "channels": channels,
        "n_bins": n_bins,
        "binarize": binarize,
        "duration": duration,
        "events_in": events_in,
        "events_out": events_out,
        "label_histogram": {str(k): v for k, v in sorted(histogram.items())},
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--in", dest="in_path", required=True, help="input HDF5 archive")
    parser.add_argument("--out", dest="out_path", required=True, help="output JSONL path")
    parser.add_argument("--groups", type=int, default=5, help="source channels per group")
    parser.add_argument("--bins", type=int, default=100, help="number of time bins")
    parser.add_argument("--binarize", action="store_true", help="clamp each cell to one event")
    parser.add_argument("--duration", type=float, default=None,
                        help="bin over [0, duration) seconds (default: archive max)")
    parser.add_argument("--source-channels", type=int, default=700)
    args = parser.parse_args(argv)
    try:
        summary = convert(
            args.in_path,
            args.out_path,
            channel_groups=args.groups,
            n_bins=args.bins,
            binarize=args.binarize,
            duration=args.duration,
            source_channels=args.source_channels,
        )
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
