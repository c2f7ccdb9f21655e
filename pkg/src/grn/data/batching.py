"""Deterministic batching over entry lists."""

import numpy as np

from ..errors import ConfigError, DataError


def batch_iterator(entries, batch_size, shuffle=False, seed=0, cycle=False):
    """Yield lists of entries of length batch_size.

    Order is deterministic per (seed, pass index); with shuffle=True each pass over
    the data is re-shuffled. With cycle=True the element stream repeats indefinitely
    (wrapping at element level, so batches stay full size); otherwise one pass is
    made and the final short batch is kept.
    """
    entries = list(entries)
    if not entries:
        raise DataError("batch_iterator got an empty entry list")
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    seed_words = [int(s) for s in (seed if isinstance(seed, (tuple, list)) else [seed])]

    def stream():
        pass_idx = 0
        while True:
            if shuffle:
                order = np.random.default_rng(seed_words + [pass_idx]).permutation(len(entries))
            else:
                order = np.arange(len(entries))
            for i in order:
                yield entries[int(i)]
            pass_idx += 1
            if not cycle:
                return

    batch = []
    for item in stream():
        batch.append(item)
        if len(batch) == batch_size:
            yield batch
            batch = []
    if batch:
        yield batch
