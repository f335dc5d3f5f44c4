"""Named random streams derived from a single master seed.

Every source of randomness in a run (weight init, per-epoch shuffling,
selection coin flips, label corruption) gets its own generator keyed by
(master seed, stream id, *extra), so consuming one stream never perturbs
another and runs are reproducible from the master seed alone.
"""

import numpy as np

STREAM_IDS = {
    "init": 0,
    "shuffle": 1,
    "selection": 2,
    "corruption": 3,
}


def stream(master_seed: int, name: str, *extra: int) -> np.random.Generator:
    """Return the named generator for this master seed.

    Extra integers key sub-streams, e.g. stream(seed, "shuffle", epoch).
    """
    if name not in STREAM_IDS:
        raise KeyError(f"unknown stream name {name!r}; expected one of {sorted(STREAM_IDS)}")
    return np.random.default_rng(np.random.SeedSequence((master_seed, STREAM_IDS[name], *extra)))


def epoch_shuffle(master_seed: int, epoch: int, n: int) -> np.ndarray:
    """Permutation of range(n) for the given epoch, reseeded from (seed, epoch)."""
    return stream(master_seed, "shuffle", epoch).permutation(n)
