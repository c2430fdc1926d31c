"""Keyed random streams.

Every random draw in compbcp comes from a ``numpy.random.Generator`` backed by
the counter-based Philox bit generator. Streams are addressed by a tuple of
small integers, so the same (master seed, key) always yields the same numbers
no matter which worker asks for them or in which order.
"""

import numpy as np

# Purpose tags keep streams for different uses apart even when the numeric
# parts of their keys coincide.
PURPOSES = {
    "folds": 1,
    "pair": 2,
    "replicate": 3,
    "method": 4,
    "screen": 5,
    "row": 6,
}


class SeedStreams:
    def __init__(self, master_seed: int):
        if master_seed < 0:
            raise ValueError(f"Seed must be non-negative, got {master_seed}")
        self.master_seed = int(master_seed)

    def seed_sequence(self, purpose: str, *keys: int) -> np.random.SeedSequence:
        if purpose not in PURPOSES:
            raise KeyError(f"Unknown stream purpose: {purpose}")
        spawn_key = (PURPOSES[purpose],) + tuple(int(k) for k in keys)
        return np.random.SeedSequence(self.master_seed, spawn_key=spawn_key)

    def generator(self, purpose: str, *keys: int) -> np.random.Generator:
        """
        Return a fresh generator for the stream ``(purpose, *keys)``.

        Args:
            purpose: One of the names in ``PURPOSES``.
            *keys: Non-negative integers identifying the stream (pair indices,
                replicate number, ...).

        Returns:
            A ``numpy.random.Generator`` over ``Philox``.
        """
        return np.random.Generator(np.random.Philox(self.seed_sequence(purpose, *keys)))

    def child_seed(self, purpose: str, *keys: int) -> int:
        """A 63-bit integer seed derived from the stream, for nested SeedStreams."""
        return int(self.seed_sequence(purpose, *keys).generate_state(1, dtype=np.uint64)[0] >> 1)


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
