#!/usr/bin/env python3
"""Generate a synthetic spoken-digit-style HDF5 archive in the SHD layout.

Each class is an ordered pair of "phonemes" drawn from a bank of four; a
phoneme is a frequency sweep across a band of the 700 input channels. Classes
share phoneme multisets pairwise (A-then-B vs B-then-A), so telling them
apart requires temporal order, not just which phonemes occurred. Spike times
are continuous seconds over a one-second utterance, matching the public
archive schema (vlen spikes/times + spikes/units + labels).
"""

from __future__ import annotations

import argparse
import json
import sys

import h5py
import numpy as np

N_CHANNELS = 700
PHONEME_BANDS = [40 + p * 160 for p in range(4)]  # band start per phoneme
BAND_WIDTH = 100
SWEEP_SECONDS = 0.15
CLASS_PAIRS = [
    (0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1), (0, 3), (3, 0), (1, 3), (3, 1),
]


def render_phoneme(rng, phoneme: int, onset: float):
    """Channel sweep: a moving cluster of active channels over the band."""
    times, units = [], []
    start = PHONEME_BANDS[phoneme]
    up = phoneme % 2 == 0  # alternate sweep direction across the bank
    n_frames = 30
    for f in range(n_frames):
        frac = f / (n_frames - 1)
        center = start + (BAND_WIDTH - 16) * (frac if up else 1.0 - frac) + 8
        t_frame = onset + SWEEP_SECONDS * frac
        for ch in range(int(center) - 6, int(center) + 6):
            if rng.random() < 0.5:
                times.append(t_frame + rng.uniform(0, SWEEP_SECONDS / n_frames))
                units.append(ch)
    return times, units


def make_archive(path: str, samples_per_class: int, seed: int, noise_spikes: int = 80) -> dict:
    rng = np.random.default_rng(seed)
    all_times, all_units, labels = [], [], []
    for label, (first, second) in enumerate(CLASS_PAIRS):
        for _ in range(samples_per_class):
            t1 = 0.10 + rng.uniform(-0.04, 0.04)
            t2 = 0.60 + rng.uniform(-0.04, 0.04)
            times, units = [], []
            for phoneme, onset in ((first, t1), (second, t2)):
                ts, us = render_phoneme(rng, phoneme, onset)
                times.extend(ts)
                units.extend(us)
            for _ in range(noise_spikes):
                times.append(rng.uniform(0.0, 1.0))
                units.append(int(rng.integers(N_CHANNELS)))
            order = np.argsort(times, kind="stable")
            all_times.append(np.asarray(times, dtype=np.float64)[order])
            all_units.append(np.asarray(units, dtype=np.int64)[order])
            labels.append(label)
    # interleave classes deterministically so file order is class-balanced
    perm = rng.permutation(len(labels))
    all_times = [all_times[i] for i in perm]
    all_units = [all_units[i] for i in perm]
    labels = [labels[i] for i in perm]
    with h5py.File(path, "w") as fh:
        spikes = fh.create_group("spikes")
        vlen_f = h5py.vlen_dtype(np.float64)
        vlen_i = h5py.vlen_dtype(np.int64)
        dt = spikes.create_dataset("times", (len(labels),), dtype=vlen_f)
        du = spikes.create_dataset("units", (len(labels),), dtype=vlen_i)
        for i, (t, u) in enumerate(zip(all_times, all_units)):
            dt[i] = t
            du[i] = u
        fh.create_dataset("labels", data=np.asarray(labels, dtype=np.int64))
    return {
        "path": path,
        "samples": len(labels),
        "classes": len(CLASS_PAIRS),
        "spikes": int(sum(len(t) for t in all_times)),
        "seed": seed,
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True)
    parser.add_argument("--samples-per-class", type=int, default=60)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    summary = make_archive(args.out, args.samples_per_class, args.seed)
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
