"""Counter-based random streams.

Each (seed, tag, index) triple names its own Philox stream, so sample index i
always sees the same bits no matter how samples are chunked across workers.
"""

import hashlib

import numpy as np

_MASK = (1 << 64) - 1


def stream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    tag64 = int.from_bytes(hashlib.sha256(tag.encode()).digest()[:8], "little")
    key = np.array([int(seed) & _MASK, tag64], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(index) & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
