"""Counter-based random streams.

Every random draw in the project comes from a Philox generator keyed by a
tuple of integers (root seed, purpose tag, fold index, instance key, ...).
Streams for distinct keys are independent, so work items can run on any
schedule, in any thread pool, and still reproduce bit-identical results.
"""

from __future__ import annotations

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF

# purpose tags for stream keys
INIT = 1
TRAIN = 2
PREDICT = 3
SPLIT = 4
FEATURES = 5


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash (also the EMBF file checksum)."""
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _U64
    return h


def key_for(text: str) -> int:
    """Stable integer key for a string identifier."""
    return fnv1a64(text.encode("utf-8"))


def stream(*key: int) -> np.random.Generator:
    """Independent generator for an integer key tuple."""
    ss = np.random.SeedSequence([k & _U64 for k in key])
    return np.random.Generator(np.random.Philox(ss))
