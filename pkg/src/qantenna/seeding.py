"""Splittable seeding for reproducible, schedule-independent Monte Carlo.

Every random stream is derived from (master seed, module tag, realization
index) through numpy's SeedSequence, so parallel realizations reproduce the
serial run regardless of worker scheduling.
"""

import zlib

import numpy as np

_MASK = (1 << 64) - 1


def derive_seed_sequence(master_seed: int, tag: str, index: int = 0) -> np.random.SeedSequence:
    """Mix (master seed, tag, index) into an independent SeedSequence."""
    return np.random.SeedSequence(
        (int(master_seed) & _MASK, zlib.crc32(tag.encode("utf-8")), int(index))
    )


def derive_rng(master_seed: int, tag: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed_sequence(master_seed, tag, index))


def derive_seed(master_seed: int, tag: str, index: int = 0) -> int:
    """A 64-bit child seed, for APIs that take a plain integer."""
    state = derive_seed_sequence(master_seed, tag, index).generate_state(2)
    return int(state[0]) | (int(state[1]) << 32)
