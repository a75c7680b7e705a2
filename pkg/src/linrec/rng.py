"""Counter-based random streams keyed by (master seed, purpose, index).

Every random object in an experiment is drawn from its own Philox stream,
so trial ``t`` sees the same numbers no matter how many workers run or in
which order trials are scheduled.
"""

import zlib

import numpy as np


def _tag_word(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str, *index: int) -> np.random.Generator:
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF, _tag_word(tag), *(int(i) for i in index)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def as_generator(seed) -> np.random.Generator:
    """Accept a Generator, an int seed, or a (seed, tag, *index) tuple."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, tuple):
        return stream(*seed)
    return stream(int(seed), "default")
