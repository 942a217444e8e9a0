"""MinHash signatures and banded LSH over word shingles."""

from __future__ import annotations

import hashlib
from collections import defaultdict
from typing import Hashable, Iterable, Sequence

import numpy as np

_PRIME = np.uint64(4294967291)  # largest prime below 2**32
_MAX_HASH = np.uint64(4294967290)


def shingles(tokens: Sequence[str], size: int = 5) -> set[str]:
    """Set of contiguous ``size``-token shingles; short documents give one shingle."""
    if not tokens:
        return set()
    if len(tokens) < size:
        return {" ".join(tokens)}
    return {" ".join(tokens[i : i + size]) for i in range(len(tokens) - size + 1)}


def _hash32(s: str) -> int:
    return int.from_bytes(hashlib.blake2b(s.encode("utf-8"), digest_size=4).digest(), "little")


class MinHasher:
    """Universal-hash MinHash, ``h(x) = (a*x + b) mod p`` with p just below 2**32.

    Coefficients come from a seeded generator so signatures are reproducible
    across processes and runs.
    """

    def __init__(self, num_perm: int = 128, seed: int = 1):
        rng = np.random.default_rng(seed)
        self.num_perm = num_perm
        # a, b < 2**31 keeps a*x + b inside uint64 for x < 2**32
        self._a = rng.integers(1, 2**31, size=num_perm, dtype=np.uint64)
        self._b = rng.integers(0, 2**31, size=num_perm, dtype=np.uint64)

    def signature(self, shingle_set: Iterable[str]) -> np.ndarray:
        hv = np.fromiter((_hash32(s) for s in shingle_set), dtype=np.uint64)
        if hv.size == 0:
            return np.full(self.num_perm, _MAX_HASH, dtype=np.uint64)
        hv %= _PRIME
        vals = (np.outer(hv, self._a) + self._b) % _PRIME
        return vals.min(axis=0)


def estimate_jaccard(sig_a: np.ndarray, sig_b: np.ndarray) -> float:
    return float(np.mean(sig_a == sig_b))


def jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


class LSHIndex:
    """Banded LSH: documents sharing any full band of their signature become candidates."""

    def __init__(self, num_perm: int = 128, bands: int = 16):
        if num_perm % bands:
            raise ValueError("num_perm must be a multiple of bands")
        self.bands = bands
        self.rows = num_perm // bands
        self._buckets: list[dict[bytes, list[Hashable]]] = [defaultdict(list) for _ in range(bands)]

    def insert(self, key: Hashable, sig: np.ndarray) -> None:
        for band, bucket in enumerate(self._buckets):
            bucket[sig[band * self.rows : (band + 1) * self.rows].tobytes()].append(key)

    def query(self, sig: np.ndarray) -> set:
        out: set = set()
        for band, bucket in enumerate(self._buckets):
            out.update(bucket.get(sig[band * self.rows : (band + 1) * self.rows].tobytes(), ()))
        return out

    def candidate_pairs(self) -> set[tuple]:
        pairs = set()
        for bucket in self._buckets:
            for keys in bucket.values():
                for i in range(len(keys)):
                    for j in range(i + 1, len(keys)):
                        a, b = keys[i], keys[j]
                        pairs.add((a, b) if a <= b else (b, a))
        return pairs
