"""Seed derivation for reproducible sampling.

A per-sample seed is the first eight bytes (little endian) of
``sha256(f"{master_seed}:{experiment}:{sample_index}")``. Inside one sampling call,
independent streams come from ``SeedSequence(seed, spawn_key=(stream,))`` feeding a PCG64
generator, so any external tool can re-derive every draw from the record alone.
"""

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_sample_seed(master_seed: int, experiment: str, sample_index: int) -> int:
    """Derive the 64-bit seed of one Monte-Carlo sample."""
    digest = hashlib.sha256(f"{master_seed}:{experiment}:{sample_index}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Build the generator for ``stream`` of a given seed."""
    sequence = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(sequence))
