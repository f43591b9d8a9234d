"""Deterministic, parallelism-invariant random streams.

Every Monte Carlo routine draws its samples in fixed-size blocks.  Block ``b``
of the stream ``(seed, tag)`` is generated by a counter-based Philox generator
keyed by ``(seed, tag)`` with the block index in the counter, so the same
``(seed, tag, b)`` always yields the same numbers no matter how many blocks
are evaluated, in which order, or on how many workers.  Reductions over blocks
must run in block-index order to keep floating-point sums reproducible.
"""

import numpy as np

BLOCK = 1 << 14


def block_rng(seed, tag, block_index):
    """Generator for block ``block_index`` of the stream keyed by ``(seed, tag)``."""
    key = np.random.SeedSequence((int(seed), int(tag))).generate_state(2, np.uint64)
    bits = np.random.Philox(key=key, counter=[0, 0, 0, int(block_index)])
    return np.random.Generator(bits)


def block_sizes(n_total, block=BLOCK):
    """Sizes of the consecutive blocks covering ``n_total`` samples."""
    n_total = int(n_total)
    full, rest = divmod(n_total, block)
    return [block] * full + ([rest] if rest else [])


def derive_seed(seed, *tags):
    """A child seed deterministically derived from ``seed`` and integer tags."""
    state = np.random.SeedSequence((int(seed),) + tuple(int(t) for t in tags))
    return int(state.generate_state(1, np.uint64)[0])
