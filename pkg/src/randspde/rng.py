"""Counter-based random streams keyed by (master seed, sample index, purpose)."""

import numpy as np

FIELD_STREAM = 0
NOISE_STREAM = 1


def stream(master_seed, index, purpose):
    """Independent Philox generator for one work item.

    The same triple always yields the same stream, so any sample can be
    regenerated in isolation regardless of how work was distributed.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(index), int(purpose)))
    return np.random.Generator(np.random.Philox(seq))
