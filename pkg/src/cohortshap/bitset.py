"""Fixed-width bitsets stored as little-endian uint64 word arrays."""

import numpy as np

WORD_BITS = 64


def n_words(n):
    return (n + WORD_BITS - 1) // WORD_BITS


def pack(flags):
    """Pack a 1-D boolean array into ``ceil(n / 64)`` uint64 words.

    Bit ``i`` of the set lives in word ``i // 64`` at position ``i % 64``.
    """
    flags = np.asarray(flags, dtype=bool)
    n = flags.shape[-1]
    raw = np.packbits(flags, axis=-1, bitorder="little")
    pad = n_words(n) * 8 - raw.shape[-1]
    if pad:
        widths = [(0, 0)] * (raw.ndim - 1) + [(0, pad)]
        raw = np.pad(raw, widths)
    return np.ascontiguousarray(raw).view("<u8")


def unpack(words, n):
    """Inverse of :func:`pack`; returns a boolean array of length ``n``."""
    words = np.ascontiguousarray(words, dtype="<u8")
    raw = words.view(np.uint8)
    return np.unpackbits(raw, axis=-1, count=n, bitorder="little").astype(bool)


def popcount(words):
    return int(np.bitwise_count(np.asarray(words, dtype="<u8")).sum())


def full(n):
    """Bitset with the first ``n`` bits set."""
    return pack(np.ones(n, dtype=bool))


def popcount_ints(values):
    """Elementwise popcount of a nonnegative integer array."""
    return np.bitwise_count(np.asarray(values, dtype=np.uint64)).astype(np.int64)
