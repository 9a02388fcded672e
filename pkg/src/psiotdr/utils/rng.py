"""Counter-based random streams.

Every block of STREAM_SHOTS consecutive shots draws from its own Philox stream
keyed by (seed, block index). Worker chunks are whole numbers of blocks, so a
histogram depends only on the seed and the shot count, never on the chunk size,
the worker that ran a chunk or the order chunks finished in.
"""
import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1
STREAM_SHOTS = 4096


def block_generator(seed: int, block_index: int) -> np.random.Generator:
    """Generator for shots block_index * STREAM_SHOTS up to the next block."""
    sequence = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=(int(block_index),))
    return np.random.Generator(np.random.Philox(sequence))


def derived_seed(seed: int, index: int) -> int:
    """Seed of repeat ``index`` of a run seeded with ``seed`` (unsigned 64-bit)."""
    digest = hashlib.sha256(f"{int(seed)}:{int(index)}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def analysis_generator(seed: int) -> np.random.Generator:
    """Generator for Monte Carlo helpers outside the shot engine (scrambler averages)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed) & SEED_MASK)))
