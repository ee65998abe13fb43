"""Signed feature hashing of whitespace-tokenized text.

Token hash: 64-bit FNV-1a over the UTF-8 bytes, with the seed XORed into
the offset basis, followed by the murmur3 ``fmix64`` finalizer. The low
``bits`` bits of the result select the slot; bit ``bits`` selects the sign
(0 -> +1, 1 -> -1).
"""

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = 0xFFFFFFFFFFFFFFFF
MAX_BITS = 30


def fmix64(h):
    h ^= h >> 33
    h = (h * 0xFF51AFD7ED558CCD) & MASK64
    h ^= h >> 33
    h = (h * 0xC4CEB9FE1A85EC53) & MASK64
    h ^= h >> 33
    return h


def token_hash(token, seed=0):
    """64-bit hash of `token` (a str) under `seed`."""
    h = FNV_OFFSET ^ (seed & MASK64)
    for byte in token.encode("utf-8"):
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return fmix64(h)


def slot_and_sign(token, bits, seed=0):
    h = token_hash(token, seed)
    slot = h & ((1 << bits) - 1)
    sign = -1.0 if (h >> bits) & 1 else 1.0
    return slot, sign


class FeatureHasher:
    """Maps bags of tokens to sparse signed count vectors of length 2**bits."""

    def __init__(self, bits, seed=0):
        if not 1 <= bits <= MAX_BITS:
            raise ValueError(f"hash_bits must be in [1, {MAX_BITS}], got {bits}")
        self.bits = int(bits)
        self.seed = int(seed)
        self.dim = 1 << self.bits
        self._cache = {}

    def lookup(self, token):
        hit = self._cache.get(token)
        if hit is None:
            hit = self._cache[token] = slot_and_sign(token, self.bits, self.seed)
        return hit

    def transform(self, tokens):
        """Return sorted ``(indices, values)`` for one bag of tokens.

        Duplicate tokens accumulate; slots whose signed sum cancels to zero
        are omitted.
        """
        acc = {}
        for tok in tokens:
            slot, sign = self.lookup(tok)
            acc[slot] = acc.get(slot, 0.0) + sign
        idx = np.array(sorted(i for i, v in acc.items() if v != 0.0), dtype=np.int64)
        val = np.array([acc[i] for i in idx], dtype=np.float64)
        return idx, val

    def transform_line(self, line):
        return self.transform(line.split())
