"""Seed derivation.

Every random draw in the package comes from a generator obtained with
:func:`substream`.  A stream is identified by a root seed plus a tuple of
tags (strings or integers).  Tags are mapped to 32-bit words with BLAKE2b and
passed to :class:`numpy.random.SeedSequence` as a spawn key, so two streams
with different tags are statistically independent and the mapping does not
depend on Python's per-process hash randomisation.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _tag_word(tag):
    if isinstance(tag, (int, np.integer)) and not isinstance(tag, bool):
        return int(tag) & 0xFFFFFFFF
    digest = hashlib.blake2b(str(tag).encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "little")


def substream(seed, *tags):
    """Return a fresh ``numpy.random.Generator`` for ``(seed, *tags)``."""
    seed = int(seed) & _MASK64
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(_tag_word(t) for t in tags))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(*parts):
    """Stable 63-bit integer seed from arbitrary printable parts.

    The parts are joined with ``|`` after ``repr``-free formatting (floats use
    ``repr`` so ``0.3`` and ``0.30000000000000004`` stay distinct).
    """
    text = "|".join(repr(p) if isinstance(p, float) else str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1
