"""Named, splittable random streams.

Each stream is a Philox generator keyed by ``(seed, purpose, *indices)``.
Adding a consumer under a new purpose never shifts the draws of an existing
one, which keeps static and mobile arms comparable under matched seeds.
"""

import hashlib
from typing import Dict, Tuple

import numpy as np

SEED_MASK = (1 << 64) - 1


def purpose_code(purpose: str) -> int:
    """Stable 32-bit code for a purpose tag (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256(purpose.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def rng_stream(seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Create the generator for stream ``(purpose, *indices)`` under ``seed``."""
    if any(i < 0 for i in indices):
        raise ValueError(f"stream indices must be non-negative: {indices}")
    seq = np.random.SeedSequence(
        entropy=seed & SEED_MASK,
        spawn_key=(purpose_code(purpose), *indices),
    )
    return np.random.Generator(np.random.Philox(seq))


class RngStreams:
    """Cache of named streams for one repetition."""

    def __init__(self, seed: int, rep: int = 0):
        self.seed = seed
        self.rep = rep
        self._streams: Dict[Tuple[str, Tuple[int, ...]], np.random.Generator] = {}

    def get(self, purpose: str, *indices: int) -> np.random.Generator:
        key = (purpose, indices)
        stream = self._streams.get(key)
        if stream is None:
            stream = rng_stream(self.seed, purpose, self.rep, *indices)
            self._streams[key] = stream
        return stream

    def node(self, purpose: str, node_id: int) -> np.random.Generator:
        return self.get(purpose, node_id)
