"""Counter-based random streams keyed by ``(seed, index...)``.

Each replication or trial draws from its own Philox stream, so results do not
depend on the order in which parallel workers finish.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *index: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(i) for i in index)])
    return np.random.Generator(np.random.Philox(ss))
