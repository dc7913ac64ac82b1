from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence]


def get_rng(seed: SeedLike = 0) -> np.random.Generator:
    """Seeded generator backed by the counter-based Philox bit generator.

    Philox streams depend only on the seed, never on the platform, so orbits
    and random starts are reproducible everywhere.
    """
    return np.random.Generator(np.random.Philox(seed))


def spawn_seeds(seed: SeedLike, count: int):
    """Independent child seeds, one per parallel task."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return seed.spawn(count)
