"""Counter-based random streams.

Every stochastic routine takes an explicit ``numpy.random.Generator``.  Streams
are Philox generators keyed by ``(seed, *path)`` so a sweep point, an MC trial
or an optimizer generation can derive its own substream without touching the
parent's state.
"""

import numpy as np


def make_rng(seed, *path):
    """Return a Philox generator for ``seed`` and an integer spawn path."""
    if isinstance(seed, np.random.Generator):
        return seed
    key = tuple(int(p) for p in path)
    ss = np.random.SeedSequence(int(seed) if seed is not None else 0, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def substream(rng, *path):
    """Derive a child generator from ``rng`` without advancing it.

    The child key is drawn from the bit generator's seed sequence, so it only
    depends on how ``rng`` was created, never on how much it has been used.
    """
    seq = rng.bit_generator.seed_seq
    child = np.random.SeedSequence(
        seq.entropy, spawn_key=tuple(seq.spawn_key) + tuple(int(p) for p in path)
    )
    return np.random.Generator(np.random.Philox(child))
