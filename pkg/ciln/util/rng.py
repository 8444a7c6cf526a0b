### Seeded random streams

import numpy as np

def make_rng(seed, *stream):
    """Returns a numpy Generator on the Philox counter-based bit generator.

    The key is derived from `seed` and the optional integer `stream` path
    with a SeedSequence, so make_rng(s, 3) and make_rng(s, 4) are
    independent streams and every platform draws the same numbers.
    """
    entropy = [int(seed)] + [int(s) for s in stream]
    if any(e < 0 for e in entropy):
        raise ValueError("seeds must be non-negative, got {}".format(entropy))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))

def split_seed(seed, *stream):
    """Derives a child integer seed, for handing to functions that take a seed"""
    return int(make_rng(seed, *stream).integers(0, 2**31 - 1))
