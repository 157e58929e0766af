"""Bucketing: partition a prefix log so each bucket trains its own model.

Two strategies: ``single`` puts every prefix into one bucket, and
``prefix-length`` groups prefixes of equal length. Tiny or single-class
buckets are not dropped here; the pipeline skips them at training time based
on :func:`bucket_manifest`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError, DataError
from .prefixing import PrefixLog, PrefixTrace

SINGLE = "single"
PREFIX_LENGTH = "prefix-length"
STRATEGIES = (SINGLE, PREFIX_LENGTH)

#: Buckets smaller than this (or with one class) are skipped for training.
DEFAULT_MIN_BUCKET_SIZE = 30


@dataclass(frozen=True, order=True)
class BucketKey:
    strategy: str
    length: Optional[int] = None

    @property
    def name(self) -> str:
        return "all" if self.strategy == SINGLE else f"len{self.length}"


def assign_buckets(
    plog: PrefixLog, strategy: str
) -> dict[BucketKey, list[PrefixTrace]]:
    """Partition the prefix log; keys are ordered (single key, or lengths ascending)."""
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown bucketing strategy {strategy!r}")
    if len(plog) == 0:
        raise DataError("cannot bucket an empty prefix log")
    if strategy == SINGLE:
        return {BucketKey(SINGLE): list(plog)}
    buckets: dict[BucketKey, list[PrefixTrace]] = {}
    for length in plog.realized_lengths():
        buckets[BucketKey(PREFIX_LENGTH, length)] = []
    for prefix in plog:
        buckets[BucketKey(PREFIX_LENGTH, prefix.prefix_length)].append(prefix)
    return buckets


def bucket_manifest(
    buckets: dict[BucketKey, list[PrefixTrace]],
    min_size: int = DEFAULT_MIN_BUCKET_SIZE,
) -> list[dict]:
    """Size, class balance and trainability of each bucket."""
    rows = []
    for key in sorted(buckets, key=lambda k: (k.strategy, k.length or 0)):
        members = buckets[key]
        positives = sum(1 for p in members if p.label == 1)
        n_classes = len({p.label for p in members})
        trainable = len(members) >= min_size and n_classes == 2
        reason = None
        if len(members) < min_size:
            reason = f"fewer than {min_size} prefixes"
        elif n_classes < 2:
            reason = "single-class bucket"
        rows.append(
            {
                "bucket": key.name,
                "strategy": key.strategy,
                "length": key.length,
                "size": len(members),
                "positive_ratio": positives / len(members),
                "trainable": trainable,
                "skip_reason": reason,
            }
        )
    return rows
