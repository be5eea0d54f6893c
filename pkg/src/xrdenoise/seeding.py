"""Stable derivation of independent random streams.

A single root seed fans out into many streams keyed by a purpose string and
integer indices, e.g. ``stream("train-pair", run_seed, epoch, index)``.
The key is hashed with BLAKE2b, so the mapping is stable across processes,
platforms and Python versions (unlike ``hash()``), and each stream is
independent of the order in which the others are consumed.
"""

import hashlib

import numpy as np


def derive_seed(purpose, *indices):
    """64-bit seed for ``(purpose, *indices)``."""
    key = "\x1f".join([str(purpose), *(str(int(i)) for i in indices)])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(purpose, *indices):
    return np.random.Generator(np.random.PCG64(derive_seed(purpose, *indices)))
