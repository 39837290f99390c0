"""Seeded, counter-based random streams.

Every random draw in the package goes through ``make_rng`` so that a run is
reproducible bit-for-bit from its integer seed. Streams are separated by
small integer tags rather than by drawing from a shared generator, which keeps
one consumer from shifting the numbers another one sees.
"""

from __future__ import annotations

import numpy as np

SAMPLE_STREAM = 0
DRCM_INIT_STREAM = 1
ORACLE_STREAM = 2

_SEED_MODULUS = 2**64


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    entropy = [int(seed) % _SEED_MODULUS, *(int(tag) % _SEED_MODULUS for tag in stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *stream: int) -> int:
    entropy = [int(seed) % _SEED_MODULUS, *(int(tag) % _SEED_MODULUS for tag in stream)]
    words = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(words[0]) << 32 | int(words[1])
