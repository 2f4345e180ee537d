"""
Seeded random streams.

Every random draw in Tomokit comes from a numpy Generator built from a
SeedSequence over (seed, *keys), so substreams are independent and reproducible.
"""

import numpy as np


def _entropy(seed, keys):
    return [int(seed)] + [int(k) for k in keys]


def substream(seed, *keys):
    """Generator for the substream (seed, *keys)."""
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed, keys)))


def derive_seed(seed, *keys):
    """A 32-bit integer seed for the substream (seed, *keys)."""
    return int(np.random.SeedSequence(_entropy(seed, keys)).generate_state(1)[0])
