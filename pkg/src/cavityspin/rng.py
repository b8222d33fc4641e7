"""Counter-based random substreams.

Every random draw in a campaign comes from a generator keyed by
(master seed, stream purpose, trial index), so trials can run in any order
or on any number of threads and still produce identical results.
"""
from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    TRANSIT = 1
    PROTOCOL = 2
    SWEEP = 3
    CALIBRATION = 4
    READOUT = 5
    G2 = 6
    MISC = 7


def substream(seed, purpose, index=0):
    """Philox generator for one (seed, purpose, index) triple."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), int(index)))
    return np.random.Generator(np.random.Philox(ss))
