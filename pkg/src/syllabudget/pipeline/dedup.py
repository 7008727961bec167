"""MinHash signatures with banded LSH, plus domain quotas."""

from __future__ import annotations

import hashlib
import re
from collections import defaultdict
from typing import Sequence

import numpy as np

from ..errors import ConfigError, ValidationError

_PRIME = np.uint64((1 << 31) - 1)  # keeps a * x below 2**62, so uint64 never overflows
_EMPTY = np.uint64(0xFFFFFFFF)


def shingles(text: str, k: int = 5) -> set[str]:
    """Character k-grams of the whitespace-normalized text (the whole text if shorter)."""
    norm = re.sub(r"\s+", " ", text).strip()
    if len(norm) <= k:
        return {norm} if norm else set()
    return {norm[i:i + k] for i in range(len(norm) - k + 1)}


def jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def _shingle_hash(s: str) -> int:
    return int.from_bytes(hashlib.blake2b(s.encode("utf-8"), digest_size=8).digest(), "little") % int(_PRIME)


class MinHasher:
    def __init__(self, num_perm: int, seed: int = 0):
        if num_perm < 1:
            raise ConfigError("num_perm must be >= 1")
        rng = np.random.Generator(np.random.PCG64(seed))
        self.a = rng.integers(1, int(_PRIME), size=num_perm, dtype=np.uint64)
        self.b = rng.integers(0, int(_PRIME), size=num_perm, dtype=np.uint64)
        self.num_perm = num_perm

    def signature(self, shingle_set: set[str]) -> np.ndarray:
        if not shingle_set:
            return np.full(self.num_perm, _EMPTY, dtype=np.uint64)
        x = np.array(sorted(_shingle_hash(s) for s in shingle_set), dtype=np.uint64)
        values = (np.outer(self.a, x) + self.b[:, None]) % _PRIME
        return values.min(axis=1)


def lsh_threshold(bands: int, rows: int) -> float:
    """Jaccard similarity at which the collision probability curve is steepest, ~(1/b)^(1/r)."""
    return (1.0 / bands) ** (1.0 / rows)


def minhash_dedup(records: Sequence, shingle_k: int = 5, bands: int = 20, rows: int = 10, seed: int = 0,
                  num_perm: int | None = None, text_of=lambda r: r.source_text) -> list:
    """Drop records whose MinHash signature shares a band with an earlier kept record.

    The first occurrence wins and only kept records enter the buckets, so the
    result does not depend on chains of near-duplicates among dropped records.
    """
    if bands < 1 or rows < 1:
        raise ConfigError("bands and rows must be >= 1")
    if num_perm is not None and num_perm != bands * rows:
        raise ConfigError(f"bands * rows = {bands * rows} does not match signature length {num_perm}")
    if shingle_k < 1:
        raise ConfigError("shingle_k must be >= 1")
    hasher = MinHasher(bands * rows, seed)
    buckets: list[set[bytes]] = [set() for _ in range(bands)]
    kept = []
    for rec in records:
        sig = hasher.signature(shingles(text_of(rec), shingle_k))
        keys = [sig[i * rows:(i + 1) * rows].tobytes() for i in range(bands)]
        if any(key in bucket for key, bucket in zip(keys, buckets)):
            continue
        for key, bucket in zip(keys, buckets):
            bucket.add(key)
        kept.append(rec)
    return kept


class InsufficientSupplyError(ValidationError):
    def __init__(self, domain, supply, quota):
        super().__init__(f"domain {domain!s} has {supply} records but the quota is {quota}")
        self.domain = domain
        self.supply = supply
        self.quota = quota


def quota_sample(records: Sequence, quotas: dict, seed: int = 0, domain_order: Sequence | None = None) -> list:
    """Draw exactly ``quotas[d]`` records per domain.

    Each domain's pool is sorted by id before drawing, so input order does not
    matter. Output is ordered by domain (``domain_order`` or first appearance
    in ``quotas``), then by id.
    """
    by_domain = defaultdict(list)
    for rec in records:
        by_domain[str(rec.domain)].append(rec)
    order = [str(d) for d in (domain_order or quotas)]
    quotas = {str(k): int(v) for k, v in quotas.items()}
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for dom in order:
        quota = quotas.get(dom, 0)
        if quota < 0:
            raise ValidationError(f"quota for {dom} must be >= 0")
        pool = sorted(by_domain.get(dom, []), key=lambda r: r.id)
        if len(pool) < quota:
            raise InsufficientSupplyError(dom, len(pool), quota)
        if quota == 0:
            continue
        picks = rng.permutation(len(pool))[:quota]
        out.extend(sorted((pool[i] for i in picks), key=lambda r: r.id))
    return out
