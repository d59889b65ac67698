"""Reproducible splittable random streams.

A master seed deterministically derives independent substreams by index via
numpy's SeedSequence spawn keys on top of the counter-based Philox generator.
Monte Carlo operations consume samples in fixed-size blocks, one substream per
block, so results are reproducible for a fixed seed independent of how blocks
are scheduled across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK_SIZE = 1 << 14


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator derived from ``seed`` and an index tuple."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def run_blocks(fn, seed, op_id, n_samples, *, workers=1, block_size=BLOCK_SIZE):
    """Evaluate ``fn(rng, count, start_index)`` over sample blocks, concatenated in block order.

    ``fn`` must return a 1-d array of per-sample values.  Block boundaries and
    substream keys depend only on (seed, op_id, block_size), never on
    ``workers``, so the concatenated output is identical for any worker count.
    """
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    blocks = []
    start = 0
    idx = 0
    while start < n_samples:
        count = min(block_size, n_samples - start)
        blocks.append((idx, count, start))
        start += count
        idx += 1
    if not blocks:
        return np.empty(0)

    def run_one(spec):
        i, count, start_index = spec
        return fn(substream(seed, op_id, i), count, start_index)

    if workers <= 1 or len(blocks) == 1:
        parts = [run_one(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_one, blocks))
    return np.concatenate(parts)
