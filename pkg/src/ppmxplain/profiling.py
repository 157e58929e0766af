"""Data-dimension analyses: per-column statistical profiles, correlation
matrices (Pearson over min-max normalized numerics, Cramér's V over
categorical pairs) and normalized mutual information against the label.

All operations run on a :class:`DataTable`, a column-oriented view built
either from a raw event log (pre-encoding, mixed dtypes, nulls allowed) or
from an encoded :class:`~ppmxplain.encoding.FeatureMatrix` (all numeric,
dense).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .encoding import FeatureMatrix
from .errors import DataError
from .log_model import CATEGORICAL, NUMERIC, EventLog

PEARSON = "pearson"
CRAMERS_V = "cramers-v"

DEFAULT_MI_BINS = 10
DEFAULT_TOP_K = 5
QUANTILE_POINTS = (5, 25, 50, 75, 95)
HISTOGRAM_BINS = 20


@dataclass
class DataTable:
    """Column-oriented table: numeric columns as float arrays with NaN for
    nulls, categorical columns as object arrays with None for nulls."""

    columns: list[str]
    kinds: dict[str, str]  # column -> "numeric" | "categorical"
    data: dict[str, np.ndarray]
    label: Optional[np.ndarray] = None

    @property
    def n_rows(self) -> int:
        return len(self.data[self.columns[0]]) if self.columns else 0

    def numeric_columns(self) -> list[str]:
        return [c for c in self.columns if self.kinds[c] == NUMERIC]

    def categorical_columns(self) -> list[str]:
        return [c for c in self.columns if self.kinds[c] == CATEGORICAL]

    @classmethod
    def from_matrix(cls, matrix: FeatureMatrix) -> "DataTable":
        data = {
            name: matrix.values[:, i].copy() for i, name in enumerate(matrix.columns)
        }
        return cls(
            columns=list(matrix.columns),
            kinds={c: NUMERIC for c in matrix.columns},
            data=data,
            label=matrix.labels.copy(),
        )

    @classmethod
    def from_log(cls, log: EventLog, include_remaining_time: bool = True) -> "DataTable":
        """Event-level view of a raw log: activity, static and dynamic
        attributes, one row per event. ``remainingtime`` (minutes until the
        trace's last event) is added for dependency analysis only; it never
        feeds the models."""
        columns = [log.schema.activity]
        kinds = {log.schema.activity: CATEGORICAL}
        for attr in log.schema.attributes:
            columns.append(attr.name)
            kinds[attr.name] = attr.dtype
        if include_remaining_time:
            columns.append("remainingtime")
            kinds["remainingtime"] = NUMERIC

        raw: dict[str, list] = {c: [] for c in columns}
        labels: list = []
        labeled = log.is_labeled()
        for trace in log:
            end = trace.events[-1].timestamp
            for event in trace.events:
                raw[log.schema.activity].append(event.activity)
                for attr in log.schema.attributes:
                    source = (
                        trace.static_payload if attr.scope == "static" else event.payload
                    )
                    raw[attr.name].append(source.get(attr.name))
                if include_remaining_time:
                    raw["remainingtime"].append(
                        (end - event.timestamp).total_seconds() / 60.0
                    )
                if labeled:
                    labels.append(trace.label)

        data: dict[str, np.ndarray] = {}
        for c in columns:
            if kinds[c] == NUMERIC:
                data[c] = np.array(
                    [np.nan if v is None else float(v) for v in raw[c]], dtype=np.float64
                )
            else:
                data[c] = np.array(raw[c], dtype=object)
        label = np.asarray(labels, dtype=np.int64) if labeled else None
        return cls(columns=columns, kinds=kinds, data=data, label=label)


# ---------------------------------------------------------------------------
# Statistical profiles
# ---------------------------------------------------------------------------


@dataclass
class ColumnProfile:
    name: str
    kind: str
    missing_fraction: float
    zero_fraction: float
    distinct_count: int
    constant: bool
    min: Optional[float] = None
    max: Optional[float] = None
    mean: Optional[float] = None
    std: Optional[float] = None
    quantiles: Optional[dict[str, float]] = None
    histogram: Optional[dict] = None
    top_values: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ProfileReport:
    columns: list[ColumnProfile]

    def column(self, name: str) -> ColumnProfile:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"columns": [c.to_dict() for c in self.columns]}


def _top_values(values: Sequence, k: int = 5) -> list:
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], str(kv[0])))
    return [{"value": v, "count": c} for v, c in ranked[:k]]


def profile(table: DataTable) -> ProfileReport:
    """Deterministic per-column statistical profile."""
    if table.n_rows == 0:
        raise DataError("cannot profile an empty table")
    n = table.n_rows
    out = []
    for name in table.columns:
        col = table.data[name]
        if table.kinds[name] == NUMERIC:
            valid = col[~np.isnan(col)]
            missing = 1.0 - len(valid) / n
            zeros = float(np.sum(valid == 0.0)) / n
            distinct = len(np.unique(valid))
            prof = ColumnProfile(
                name=name,
                kind=NUMERIC,
                missing_fraction=missing,
                zero_fraction=zeros,
                distinct_count=distinct,
                constant=distinct == 1,
                top_values=_top_values(valid.tolist()),
            )
            if len(valid):
                hist_counts, hist_edges = np.histogram(valid, bins=HISTOGRAM_BINS)
                prof.min = float(valid.min())
                prof.max = float(valid.max())
                prof.mean = float(valid.mean())
                prof.std = float(valid.std())
                prof.quantiles = {
                    str(q): float(np.percentile(valid, q)) for q in QUANTILE_POINTS
                }
                prof.histogram = {
                    "counts": hist_counts.tolist(),
                    "edges": hist_edges.tolist(),
                }
        else:
            present = [v for v in col.tolist() if v is not None]
            distinct = len(set(present))
            prof = ColumnProfile(
                name=name,
                kind=CATEGORICAL,
                missing_fraction=1.0 - len(present) / n,
                zero_fraction=0.0,
                distinct_count=distinct,
                constant=distinct == 1,
                top_values=_top_values(present),
            )
        out.append(prof)
    return ProfileReport(out)


# ---------------------------------------------------------------------------
# Correlation matrices
# ---------------------------------------------------------------------------


@dataclass
class CorrelationMatrix:
    method: str
    columns: list[str]
    values: np.ndarray  # (d, d)
    constant_columns: list[str] = field(default_factory=list)

    def pair(self, a: str, b: str) -> float:
        i, j = self.columns.index(a), self.columns.index(b)
        return float(self.values[i, j])

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "columns": self.columns,
            "constant_columns": self.constant_columns,
            "values": [[float(v) for v in row] for row in self.values],
        }

    def to_csv(self, path) -> None:
        import csv as _csv

        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow([""] + self.columns)
            for name, row in zip(self.columns, self.values):
                writer.writerow([name] + [repr(float(v)) for v in row])


def min_max_normalize(x: np.ndarray) -> np.ndarray:
    """Scale each column to [0, 1]; constant columns map to 0."""
    lo = np.nanmin(x, axis=0)
    hi = np.nanmax(x, axis=0)
    span = hi - lo
    safe = np.where(span == 0.0, 1.0, span)
    out = (x - lo) / safe
    out[:, span == 0.0] = 0.0
    return out


def pearson_matrix(table: DataTable) -> CorrelationMatrix:
    """Pearson correlations of min-max normalized numeric columns.

    Pairs involving a constant column are 0 by convention and the column is
    flagged. Nulls (raw tables only) are dropped pairwise.
    """
    names = table.numeric_columns()
    if table.n_rows < 2:
        raise DataError("pearson correlation needs at least 2 rows")
    x = np.column_stack([table.data[c] for c in names]).astype(np.float64)
    x = min_max_normalize(x)
    d = x.shape[1]
    has_nan = bool(np.isnan(x).any())
    constant = [
        names[j]
        for j in range(d)
        if len(np.unique(x[~np.isnan(x[:, j]), j])) <= 1
    ]
    const_idx = {names.index(c) for c in constant}

    values = np.zeros((d, d), dtype=np.float64)
    if not has_nan:
        keep = [j for j in range(d) if j not in const_idx]
        if keep:
            sub = np.corrcoef(x[:, keep], rowvar=False)
            sub = np.atleast_2d(sub)
            for a, ja in enumerate(keep):
                for b, jb in enumerate(keep):
                    values[ja, jb] = sub[a, b]
    else:
        for ja in range(d):
            if ja in const_idx:
                continue
            values[ja, ja] = 1.0
            for jb in range(ja + 1, d):
                if jb in const_idx:
                    continue
                mask = ~np.isnan(x[:, ja]) & ~np.isnan(x[:, jb])
                if mask.sum() < 2:
                    continue
                a, b = x[mask, ja], x[mask, jb]
                if a.std() == 0.0 or b.std() == 0.0:
                    continue
                values[ja, jb] = values[jb, ja] = float(np.corrcoef(a, b)[0, 1])
    np.clip(values, -1.0, 1.0, out=values)
    # BLAS-backed corrcoef is not bitwise symmetric; mirror the upper triangle
    values = np.triu(values) + np.triu(values, 1).T
    for j in range(d):
        values[j, j] = 0.0 if j in const_idx else 1.0
    return CorrelationMatrix(PEARSON, names, values, constant)


def cramers_v(col_a: Sequence, col_b: Sequence) -> float:
    """Classical (uncorrected) Cramér's V between two categorical columns.

    V = sqrt(chi2 / (n * (min(r, c) - 1))) over the observed contingency
    table; 0 by convention when either column has a single level.
    """
    a = np.asarray(col_a, dtype=object)
    b = np.asarray(col_b, dtype=object)
    if len(a) != len(b):
        raise DataError("cramers_v needs columns of equal length")
    mask = np.array([u is not None and v is not None for u, v in zip(a, b)])
    a, b = a[mask], b[mask]
    if len(a) == 0:
        raise DataError("cramers_v needs at least one complete observation")
    levels_a, ia = np.unique(a.astype(str), return_inverse=True)
    levels_b, ib = np.unique(b.astype(str), return_inverse=True)
    r, c = len(levels_a), len(levels_b)
    if min(r, c) == 1:
        return 0.0
    observed = np.zeros((r, c), dtype=np.float64)
    np.add.at(observed, (ia, ib), 1.0)
    n = observed.sum()
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0)) / n
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    return math.sqrt(chi2 / (n * (min(r, c) - 1)))


def cramers_v_matrix(table: DataTable) -> CorrelationMatrix:
    """Pairwise Cramér's V over the table's categorical columns."""
    names = table.categorical_columns()
    d = len(names)
    values = np.zeros((d, d), dtype=np.float64)
    constant = []
    for j, name in enumerate(names):
        present = {v for v in table.data[name].tolist() if v is not None}
        if len(present) <= 1:
            constant.append(name)
    const_idx = {names.index(c) for c in constant}
    for ja in range(d):
        if ja not in const_idx:
            values[ja, ja] = 1.0
        for jb in range(ja + 1, d):
            if ja in const_idx or jb in const_idx:
                continue
            v = cramers_v(table.data[names[ja]], table.data[names[jb]])
            values[ja, jb] = values[jb, ja] = v
    return CorrelationMatrix(CRAMERS_V, names, values, constant)


# ---------------------------------------------------------------------------
# Mutual information
# ---------------------------------------------------------------------------


def _discretize(table: DataTable, name: str, bins: int) -> np.ndarray:
    """Integer codes for a column: quantile bins for numerics (nulls get a
    dedicated code), level codes for categoricals."""
    col = table.data[name]
    if table.kinds[name] == NUMERIC:
        codes = np.full(len(col), -1, dtype=np.int64)
        valid = ~np.isnan(col)
        if valid.any():
            edges = np.unique(
                np.quantile(col[valid], np.linspace(0, 1, bins + 1)[1:-1])
            )
            codes[valid] = np.searchsorted(edges, col[valid], side="left")
        return codes
    levels: dict = {}
    codes = np.empty(len(col), dtype=np.int64)
    for i, v in enumerate(col.tolist()):
        key = "\0null" if v is None else str(v)
        codes[i] = levels.setdefault(key, len(levels))
    return codes


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def normalized_mutual_information(x_codes: np.ndarray, y_codes: np.ndarray) -> float:
    """I(X;Y) / min(H(X), H(Y)), defined as 0 when either entropy is 0."""
    _, xi = np.unique(x_codes, return_inverse=True)
    _, yi = np.unique(y_codes, return_inverse=True)
    nx, ny = xi.max() + 1, yi.max() + 1
    joint = np.zeros((nx, ny), dtype=np.float64)
    np.add.at(joint, (xi, yi), 1.0)
    hx = _entropy(joint.sum(axis=1))
    hy = _entropy(joint.sum(axis=0))
    if hx == 0.0 or hy == 0.0:
        return 0.0
    n = joint.sum()
    pj = joint / n
    px = pj.sum(axis=1, keepdims=True)
    py = pj.sum(axis=0, keepdims=True)
    mask = pj > 0
    mi = float(np.sum(pj[mask] * np.log(pj[mask] / (px @ py)[mask])))
    value = mi / min(hx, hy)
    return float(min(max(value, 0.0), 1.0))


@dataclass
class MIReport:
    columns: list[str]
    values: np.ndarray  # NMI against the label, in [0, 1]
    k: int = DEFAULT_TOP_K

    @property
    def ranking(self) -> list[str]:
        order = np.lexsort((np.arange(len(self.columns)), -self.values))
        return [self.columns[i] for i in order]

    def top_k(self, k: Optional[int] = None) -> list[str]:
        return self.ranking[: (self.k if k is None else k)]

    def value(self, name: str) -> float:
        return float(self.values[self.columns.index(name)])

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "values": {c: float(v) for c, v in zip(self.columns, self.values)},
            "ranking": self.ranking,
            "top_k": self.top_k(),
        }


def mutual_info(
    table: DataTable, bins: int = DEFAULT_MI_BINS, k: int = DEFAULT_TOP_K
) -> MIReport:
    """Normalized mutual information of every column with the binary label."""
    if table.label is None:
        raise DataError("mutual information requires a labeled table")
    y = table.label.astype(np.int64)
    values = np.zeros(len(table.columns), dtype=np.float64)
    for j, name in enumerate(table.columns):
        codes = _discretize(table, name, bins)
        values[j] = normalized_mutual_information(codes, y)
    return MIReport(list(table.columns), values, k=k)
