"""Labelled, reproducible random substreams.

Each work unit of a run owns one stream keyed by ``(master_seed, label)``.
Streams are derived with :class:`numpy.random.SeedSequence` spawn keys and
drive a counter-based Philox generator, so the sample sequence depends only on
the key and never on how work units are scheduled.
"""
from __future__ import annotations

import numpy as np

SEED_LIMIT = 2**64


class RandomStream:
    """Single-owner stream of uniform and normal variates.

    Scalar and vectorized draws consume the underlying generator identically:
    ``n`` calls to ``uniform()`` return the same values as one ``uniform(n)``.
    """

    def __init__(self, master_seed: int, label: tuple[int, ...] = (0, 0)):
        master_seed = int(master_seed)
        if not 0 <= master_seed < SEED_LIMIT:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
        label = tuple(int(x) for x in label)
        if any(x < 0 for x in label):
            raise ValueError(f"stream label entries must be non-negative, got {label}")
        self.master_seed = master_seed
        self.label = label
        seq = np.random.SeedSequence(master_seed, spawn_key=label)
        self._gen = np.random.Generator(np.random.Philox(seq))

    def __repr__(self):
        return f"RandomStream(master_seed={self.master_seed}, label={self.label})"

    def uniform(self, size=None):
        """Uniform variates on ``[0, 1)``."""
        return self._gen.random(size)

    def normal(self, sigma: float, size=None):
        return self._gen.normal(0.0, sigma, size)
