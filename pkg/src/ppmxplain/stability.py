"""Cross-run and cross-method comparison of importance rankings.

A run fingerprint stores, per bucket and per method, the importance vector
produced by that run together with the full settings. Comparing two
fingerprints that differ only in seed quantifies explanation stability:
top-k set Jaccard, Spearman rank correlation over the union of both top-k
sets (features outside a run's top-k rank as the universe size), and the mean
absolute score difference on shared top-k features.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .models.importance import ImportanceVector
from .profiling import CorrelationMatrix, MIReport

DEFAULT_TOP_K = 5
DEFAULT_CORR_THRESHOLD = 0.9


@dataclass
class RunFingerprint:
    settings: dict  # full run settings; must differ only in "seed" to compare
    methods: dict[str, dict[str, ImportanceVector]]  # bucket -> method -> vector
    profiling_refs: dict = field(default_factory=dict)

    def settings_without_seed(self) -> dict:
        def strip(obj):
            if isinstance(obj, dict):
                return {k: strip(v) for k, v in obj.items() if k != "seed"}
            return obj

        return strip(self.settings)

    def to_dict(self) -> dict:
        return {
            "settings": self.settings,
            "profiling_refs": self.profiling_refs,
            "methods": {
                bucket: {m: iv.to_dict() for m, iv in per_method.items()}
                for bucket, per_method in self.methods.items()
            },
        }

    @classmethod
    def from_dict(cls, d) -> "RunFingerprint":
        return cls(
            settings=dict(d["settings"]),
            profiling_refs=dict(d.get("profiling_refs", {})),
            methods={
                bucket: {
                    m: ImportanceVector.from_dict(iv) for m, iv in per_method.items()
                }
                for bucket, per_method in d["methods"].items()
            },
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "RunFingerprint":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _spearman(xs: np.ndarray, ys: np.ndarray) -> float:
    if len(xs) == 0:
        return 0.0
    if np.array_equal(xs, ys):
        return 1.0
    sx, sy = xs.std(), ys.std()
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float(np.corrcoef(xs, ys)[0, 1])


@dataclass
class StabilityEntry:
    bucket: str
    method: str
    jaccard: float
    spearman: float
    mean_abs_score_diff: float
    shared_top_k: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class StabilityReport:
    k: int
    entries: list[StabilityEntry]

    def entry(self, bucket: str, method: str) -> StabilityEntry:
        for e in self.entries:
            if e.bucket == bucket and e.method == method:
                return e
        raise KeyError((bucket, method))

    def to_dict(self) -> dict:
        return {"k": self.k, "entries": [e.to_dict() for e in self.entries]}

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["bucket", "method", "jaccard", "spearman", "mean_abs_score_diff", "shared_top_k"]
            )
            for e in self.entries:
                writer.writerow(
                    [
                        e.bucket,
                        e.method,
                        repr(e.jaccard),
                        repr(e.spearman),
                        repr(e.mean_abs_score_diff),
                        e.shared_top_k,
                    ]
                )


def _compare_vectors(
    a: ImportanceVector, b: ImportanceVector, k: int
) -> tuple[float, float, float, int]:
    if list(a.columns) != list(b.columns):
        raise ConfigError(
            f"mismatched column universes for method {a.method!r}: "
            f"{len(a.columns)} vs {len(b.columns)} columns"
        )
    top_a = set(a.top(k))
    top_b = set(b.top(k))
    union = top_a | top_b
    jaccard = len(top_a & top_b) / len(union) if union else 1.0

    universe = len(a.columns)
    rank_a = {name: i + 1 for i, name in enumerate(a.ranking)}
    rank_b = {name: i + 1 for i, name in enumerate(b.ranking)}
    members = sorted(union)
    xs = np.array(
        [rank_a[m] if m in top_a else universe for m in members], dtype=np.float64
    )
    ys = np.array(
        [rank_b[m] if m in top_b else universe for m in members], dtype=np.float64
    )
    spearman = _spearman(xs, ys)

    shared = sorted(top_a & top_b)
    diff = (
        float(np.mean([abs(a.score(m) - b.score(m)) for m in shared]))
        if shared
        else 0.0
    )
    return jaccard, spearman, diff, len(shared)


def compare_runs(
    a: RunFingerprint, b: RunFingerprint, k: int = DEFAULT_TOP_K
) -> StabilityReport:
    """Per-bucket, per-method stability metrics between two runs.

    Requires identical settings apart from the seed; metrics are symmetric.
    """
    if a.settings_without_seed() != b.settings_without_seed():
        raise ConfigError("fingerprints differ in settings other than the seed")
    entries = []
    for bucket in sorted(set(a.methods) & set(b.methods)):
        shared_methods = sorted(set(a.methods[bucket]) & set(b.methods[bucket]))
        for method in shared_methods:
            jaccard, spearman, diff, shared = _compare_vectors(
                a.methods[bucket][method], b.methods[bucket][method], k
            )
            entries.append(
                StabilityEntry(
                    bucket=bucket,
                    method=method,
                    jaccard=jaccard,
                    spearman=spearman,
                    mean_abs_score_diff=diff,
                    shared_top_k=shared,
                )
            )
    return StabilityReport(k=k, entries=entries)


@dataclass
class AgreementReport:
    method: str
    k: int
    overlap_at_k: float  # |top-k(method) & top-k(MI)| / k
    rank_correlation: Optional[float]  # Spearman over the overlap, None if < 2 members
    overlap_members: list[str]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def agreement_with_mi(
    iv: ImportanceVector, mi: MIReport, k: int = DEFAULT_TOP_K
) -> AgreementReport:
    """Overlap between a method's top-k and the MI top-k over a shared universe."""
    top_iv = iv.top(k)
    top_mi = mi.top_k(k)
    overlap = sorted(set(top_iv) & set(top_mi))
    rank_iv = {name: i + 1 for i, name in enumerate(iv.ranking)}
    rank_mi = {name: i + 1 for i, name in enumerate(mi.ranking)}
    correlation = None
    if len(overlap) >= 2:
        xs = np.array([rank_iv[m] for m in overlap], dtype=np.float64)
        ys = np.array([rank_mi[m] for m in overlap], dtype=np.float64)
        correlation = _spearman(xs, ys)
    return AgreementReport(
        method=iv.method,
        k=k,
        overlap_at_k=len(overlap) / k,
        rank_correlation=correlation,
        overlap_members=overlap,
    )


@dataclass
class CollinearityFlag:
    method: str
    col_a: str
    col_b: str
    correlation: float
    threshold: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def collinearity_scan(
    iv: ImportanceVector,
    corr: CorrelationMatrix,
    k: int = DEFAULT_TOP_K,
    threshold: float = DEFAULT_CORR_THRESHOLD,
) -> list[CollinearityFlag]:
    """Highly correlated pairs inside a method's top-k, sorted by |corr| descending."""
    top = iv.top(k)
    flags = []
    for i, col_a in enumerate(top):
        for col_b in top[i + 1 :]:
            value = corr.pair(col_a, col_b)
            if abs(value) >= threshold:
                flags.append(
                    CollinearityFlag(
                        method=iv.method,
                        col_a=col_a,
                        col_b=col_b,
                        correlation=value,
                        threshold=threshold,
                    )
                )
    flags.sort(key=lambda f: (-abs(f.correlation), f.col_a, f.col_b))
    return flags
