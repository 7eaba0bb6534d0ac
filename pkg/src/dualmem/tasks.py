"""Synthetic benchmark tasks.

The delayed-recall task isolates long-horizon retention: a 2-bit cue appears
in the first four steps, then nothing happens for ``gap`` steps, then a go
signal fires; the label is the cue. Any model whose only memory is a leaky
membrane loses the cue across a long gap.

The dense-wave task is a small clocked-sequence benchmark whose classes are
defined by slow global structure (frequency and phase of a noisy sine), so
accuracy should tolerate coarse memory-update dilation.
"""

from __future__ import annotations

import numpy as np

from .data import DenseSequence, EventSequence
from .errors import ConfigError

RECALL_CHANNELS = 3  # bit0, bit1, go
RECALL_CLASSES = 4
RECALL_CUE_STEPS = 4
RECALL_GO_STEPS = 4


def make_delayed_recall(
    n_samples: int,
    gap: int,
    seed: int,
    noise: float = 0.02,
    drop: float = 0.1,
) -> list[EventSequence]:
    """Generate delayed-recall samples: cue, silent gap, go; label = cue.

    Cue spikes drop out independently with probability ``drop`` and every
    (step, channel) cell carries background noise with probability ``noise``,
    so the task cannot be solved by memorizing exact spike counts.
    """
    if gap < 0:
        raise ConfigError(f"gap must be >= 0, got {gap}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    T = RECALL_CUE_STEPS + gap + RECALL_GO_STEPS
    out = []
    for i in range(n_samples):
        label = int(rng.integers(RECALL_CLASSES))
        events = []
        for k in range(RECALL_CUE_STEPS):
            for bit in range(2):
                if (label >> bit) & 1 and rng.random() >= drop:
                    events.append((k, bit))
        for k in range(RECALL_CUE_STEPS + gap, T):
            if rng.random() >= drop:
                events.append((k, 2))
        noise_mask = rng.random((T, RECALL_CHANNELS)) < noise
        for k, ch in np.argwhere(noise_mask):
            events.append((int(k), int(ch)))
        ev = np.array(sorted(set(events)), dtype=np.int64).reshape(-1, 2)
        ev = ev[np.argsort(ev[:, 0], kind="stable")]
        out.append(
            EventSequence(
                sample_id=f"recall-{gap}-{i:05d}",
                label=label,
                num_steps=T,
                channels=RECALL_CHANNELS,
                events=ev,
            )
        )
    return out


WAVE_CLASSES = 4  # (frequency, phase) in {1, 2} x {0, pi}


def make_dense_waves(
    n_samples: int,
    num_steps: int = 100,
    seed: int = 0,
    noise: float = 0.03,
) -> list[DenseSequence]:
    """Noisy sine streams classified by (frequency, phase)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 5]))
    t = np.arange(num_steps) / num_steps
    out = []
    for i in range(n_samples):
        label = int(rng.integers(WAVE_CLASSES))
        freq = 1.0 if label < 2 else 2.0
        phase = 0.0 if label % 2 == 0 else np.pi
        values = 0.5 + 0.4 * np.sin(2 * np.pi * freq * t + phase)
        values = values + rng.normal(scale=noise, size=num_steps)
        out.append(
            DenseSequence(
                sample_id=f"wave-{i:05d}",
                label=label,
                values=np.clip(values, 0.0, 1.0),
            )
        )
    return out
