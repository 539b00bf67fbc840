"""
Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by
(seed, stream, index), so shot k or ensemble member k is reproducible on its
own, whatever order or process it is evaluated in.
"""
import numpy as np

# stream tags
SHOTS = 0
ENSEMBLE = 1
LAYERED_FIRST = 2
LAYERED_SECOND = 3


def generator(seed: int, stream: int, index: int) -> np.random.Generator:
    """Independent generator for item `index` of `stream` under `seed`."""
    seq = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(seq))
