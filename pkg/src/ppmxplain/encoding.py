"""Fixed-width numeric encoding of prefix buckets.

Static attributes are encoded once per prefix (numeric copied, categorical
one-hot over the fitted vocabulary). Dynamic attributes are encoded either by
aggregation (per-level event counts plus min/max/mean/sum/std of numeric
values) or by index (per event position: one-hot of the categorical level and
the raw numeric value).

Vocabularies are fitted on the training bucket only; levels unseen at fit
time encode as all-zero groups. Null numerics are excluded from aggregates
(an all-null attribute aggregates to 0) and index-encode as 0, which keeps
matrices dense and NaN-free.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError, MixedLengthBucketError, UnknownAttributeError
from .log_model import CATEGORICAL, NUMERIC, LogSchema
from .prefixing import PrefixTrace

AGGREGATION = "aggregation"
INDEX = "index"
ENCODING_KINDS = (AGGREGATION, INDEX)

AGG_FUNCTIONS = ("min", "max", "mean", "sum", "std")

LABEL_COLUMN = "label"


@dataclass(frozen=True)
class FeatureDescriptor:
    """Provenance of one matrix column: source attribute and transform."""

    column_name: str
    source: str
    transform: str  # static-numeric | static-onehot | freq | agg | index-onehot | index-numeric
    level: Optional[str] = None
    fn: Optional[str] = None
    position: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "column_name": self.column_name,
            "source": self.source,
            "transform": self.transform,
            "level": self.level,
            "fn": self.fn,
            "position": self.position,
        }

    @classmethod
    def from_dict(cls, d) -> "FeatureDescriptor":
        return cls(
            column_name=d["column_name"],
            source=d["source"],
            transform=d["transform"],
            level=d.get("level"),
            fn=d.get("fn"),
            position=d.get("position"),
        )


def _column_name(source: str, transform: str, level=None, fn=None, position=None) -> str:
    if transform == "static-numeric":
        return source
    if transform == "static-onehot":
        return f"{source}_{level}"
    if transform == "freq":
        return f"{source}_{level}"
    if transform == "agg":
        return f"{source}_{fn}"
    if transform == "index-onehot":
        return f"{source}_{position}_{level}"
    if transform == "index-numeric":
        return f"{source}_{position}"
    raise ValueError(f"unknown transform {transform!r}")


@dataclass(frozen=True)
class EncoderSpec:
    """Fitted encoder: per-attribute vocabularies and the resulting column layout."""

    kind: str
    schema: LogSchema
    static_levels: dict[str, tuple[str, ...]]
    dynamic_levels: dict[str, tuple[str, ...]]
    prefix_length: Optional[int]  # only for kind == "index"
    descriptors: tuple[FeatureDescriptor, ...]

    @property
    def columns(self) -> list[str]:
        return [d.column_name for d in self.descriptors]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "prefix_length": self.prefix_length,
            "static_levels": {k: list(v) for k, v in self.static_levels.items()},
            "dynamic_levels": {k: list(v) for k, v in self.dynamic_levels.items()},
            "columns": self.columns,
        }


def _sorted_levels(values: Iterable) -> tuple[str, ...]:
    return tuple(sorted({str(v) for v in values if v is not None}))


def _build_descriptors(
    kind: str,
    schema: LogSchema,
    static_levels: dict[str, tuple[str, ...]],
    dynamic_levels: dict[str, tuple[str, ...]],
    prefix_length: Optional[int],
) -> tuple[FeatureDescriptor, ...]:
    out: list[FeatureDescriptor] = []

    def add(source, transform, **kw):
        name = _column_name(source, transform, **kw)
        out.append(FeatureDescriptor(name, source, transform, **kw))

    for attr in schema.static_attributes():
        if attr.dtype == NUMERIC:
            add(attr.name, "static-numeric")
    for attr in schema.static_attributes():
        if attr.dtype == CATEGORICAL:
            for level in static_levels[attr.name]:
                add(attr.name, "static-onehot", level=level)

    dynamic_attrs = list(schema.dynamic_attributes())
    if kind == AGGREGATION:
        for name, levels in dynamic_levels.items():
            for level in levels:
                add(name, "freq", level=level)
        for attr in dynamic_attrs:
            if attr.dtype == NUMERIC:
                for fn in AGG_FUNCTIONS:
                    add(attr.name, "agg", fn=fn)
    else:
        for name, levels in dynamic_levels.items():
            for position in range(1, prefix_length + 1):
                for level in levels:
                    add(name, "index-onehot", level=level, position=position)
        for attr in dynamic_attrs:
            if attr.dtype == NUMERIC:
                for position in range(1, prefix_length + 1):
                    add(attr.name, "index-numeric", position=position)

    names = [d.column_name for d in out]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DataError(f"encoded column names collide: {dupes}")
    return tuple(out)


def fit_encoder(
    bucket: Sequence[PrefixTrace], kind: str, schema: LogSchema
) -> EncoderSpec:
    """Fit vocabularies and the column layout on one bucket of prefixes.

    The activity is treated as a dynamic categorical attribute. Index
    encoding requires every prefix in the bucket to share one length.
    """
    if kind not in ENCODING_KINDS:
        raise DataError(f"unknown encoding kind {kind!r}")
    if not bucket:
        raise DataError("cannot fit an encoder on an empty bucket")

    prefix_length = None
    if kind == INDEX:
        lengths = {p.prefix_length for p in bucket}
        if len(lengths) != 1:
            raise MixedLengthBucketError(
                f"index encoding needs a fixed-length bucket, got lengths "
                f"{sorted(lengths)}"
            )
        prefix_length = lengths.pop()

    static_levels = {
        attr.name: _sorted_levels(p.static_payload.get(attr.name) for p in bucket)
        for attr in schema.static_attributes()
        if attr.dtype == CATEGORICAL
    }
    dynamic_levels: dict[str, tuple[str, ...]] = {
        schema.activity: _sorted_levels(
            e.activity for p in bucket for e in p.events
        )
    }
    for attr in schema.dynamic_attributes():
        if attr.dtype == CATEGORICAL:
            dynamic_levels[attr.name] = _sorted_levels(
                e.payload.get(attr.name) for p in bucket for e in p.events
            )

    descriptors = _build_descriptors(
        kind, schema, static_levels, dynamic_levels, prefix_length
    )
    return EncoderSpec(
        kind=kind,
        schema=schema,
        static_levels=static_levels,
        dynamic_levels=dynamic_levels,
        prefix_length=prefix_length,
        descriptors=descriptors,
    )


def expected_width(spec: EncoderSpec) -> int:
    """Closed-form column count of a fitted encoder (dimensionality audit)."""
    schema = spec.schema
    n_static_num = sum(
        1 for a in schema.static_attributes() if a.dtype == NUMERIC
    )
    static_cat = sum(len(v) for v in spec.static_levels.values())
    dyn_cat = sum(len(v) for v in spec.dynamic_levels.values())
    n_dyn_num = sum(1 for a in schema.dynamic_attributes() if a.dtype == NUMERIC)
    if spec.kind == AGGREGATION:
        return n_static_num + static_cat + dyn_cat + len(AGG_FUNCTIONS) * n_dyn_num
    return n_static_num + static_cat + spec.prefix_length * (dyn_cat + n_dyn_num)


@dataclass
class FeatureMatrix:
    """Dense numeric matrix with per-column provenance and per-row labels."""

    columns: list[str]
    descriptors: list[FeatureDescriptor]
    values: np.ndarray  # (n_rows, n_columns) float64
    labels: np.ndarray  # (n_rows,) int64
    row_ids: list[str]

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError as exc:
            raise UnknownAttributeError(f"matrix has no column {name!r}") from exc

    def zero_fraction(self) -> float:
        return float(np.mean(self.values == 0.0))

    def to_csv(self, path, sidecar_path=None) -> None:
        """Write values as CSV (columns then label) plus a JSON descriptor sidecar."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns + [LABEL_COLUMN])
            for i in range(self.n_rows):
                writer.writerow(
                    [repr(v) for v in self.values[i].tolist()]
                    + [str(int(self.labels[i]))]
                )
        sidecar = self.sidecar_file(path) if sidecar_path is None else sidecar_path
        with open(sidecar, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "row_ids": self.row_ids,
                    "descriptors": [d.to_dict() for d in self.descriptors],
                },
                fh,
                indent=2,
                sort_keys=True,
            )

    @staticmethod
    def sidecar_file(path) -> str:
        return f"{path}.columns.json"

    @classmethod
    def from_csv(cls, path, sidecar_path=None) -> "FeatureMatrix":
        sidecar = cls.sidecar_file(path) if sidecar_path is None else sidecar_path
        with open(sidecar, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        descriptors = [FeatureDescriptor.from_dict(d) for d in meta["descriptors"]]
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[-1] != LABEL_COLUMN:
                raise DataError(f"{path}: last column must be {LABEL_COLUMN!r}")
            columns = header[:-1]
            values, labels = [], []
            for row in reader:
                values.append([float(v) for v in row[:-1]])
                labels.append(int(row[-1]))
        if columns != [d.column_name for d in descriptors]:
            raise DataError(f"{path}: CSV header does not match descriptor sidecar")
        return cls(
            columns=columns,
            descriptors=descriptors,
            values=np.asarray(values, dtype=np.float64).reshape(len(labels), len(columns)),
            labels=np.asarray(labels, dtype=np.int64),
            row_ids=list(meta["row_ids"]),
        )


def _population_std(values: list[float]) -> float:
    n = len(values)
    mean = sum(values) / n
    return (sum((v - mean) ** 2 for v in values) / n) ** 0.5


def transform(spec: EncoderSpec, prefixes: Sequence[PrefixTrace]) -> FeatureMatrix:
    """Encode prefixes against a fitted spec; output column set is exactly the
    fitted layout in fitted order, with no NaNs."""
    if not prefixes:
        raise DataError("cannot transform an empty prefix collection")
    schema = spec.schema
    if spec.kind == INDEX:
        bad = {p.prefix_length for p in prefixes} - {spec.prefix_length}
        if bad:
            raise MixedLengthBucketError(
                f"index encoder fitted for length {spec.prefix_length}, "
                f"got lengths {sorted(bad)}"
            )

    col_of = {d.column_name: i for i, d in enumerate(spec.descriptors)}
    n, d = len(prefixes), len(spec.descriptors)
    values = np.zeros((n, d), dtype=np.float64)
    labels = np.zeros(n, dtype=np.int64)
    row_ids = []

    static_cat = {a.name for a in schema.static_attributes() if a.dtype == CATEGORICAL}
    static_num = [a.name for a in schema.static_attributes() if a.dtype == NUMERIC]
    dyn_cat = list(spec.dynamic_levels)
    dyn_num = [a.name for a in schema.dynamic_attributes() if a.dtype == NUMERIC]
    level_sets = {name: set(levels) for name, levels in spec.dynamic_levels.items()}

    def event_level(event, attr_name):
        if attr_name == schema.activity:
            return event.activity
        return event.payload.get(attr_name)

    for i, prefix in enumerate(prefixes):
        row = values[i]
        row_ids.append(prefix.prefix_id)
        if prefix.label is None:
            raise DataError(f"prefix {prefix.prefix_id} is unlabeled")
        labels[i] = prefix.label

        for name in static_num:
            value = prefix.static_payload.get(name)
            row[col_of[name]] = 0.0 if value is None else float(value)
        for name in static_cat:
            value = prefix.static_payload.get(name)
            if value is not None:
                key = _column_name(name, "static-onehot", level=str(value))
                if key in col_of:  # unseen level encodes as all zeros
                    row[col_of[key]] = 1.0

        if spec.kind == AGGREGATION:
            for name in dyn_cat:
                known = level_sets[name]
                for event in prefix.events:
                    level = event_level(event, name)
                    if level is not None and str(level) in known:
                        row[col_of[_column_name(name, "freq", level=str(level))]] += 1.0
            for name in dyn_num:
                observed = [
                    float(e.payload[name])
                    for e in prefix.events
                    if e.payload.get(name) is not None
                ]
                if observed:
                    row[col_of[_column_name(name, "agg", fn="min")]] = min(observed)
                    row[col_of[_column_name(name, "agg", fn="max")]] = max(observed)
                    row[col_of[_column_name(name, "agg", fn="mean")]] = sum(observed) / len(observed)
                    row[col_of[_column_name(name, "agg", fn="sum")]] = sum(observed)
                    row[col_of[_column_name(name, "agg", fn="std")]] = _population_std(observed)
        else:
            for position, event in enumerate(prefix.events, start=1):
                for name in dyn_cat:
                    level = event_level(event, name)
                    if level is not None and str(level) in level_sets[name]:
                        key = _column_name(
                            name, "index-onehot", level=str(level), position=position
                        )
                        row[col_of[key]] = 1.0
                for name in dyn_num:
                    value = event.payload.get(name)
                    if value is not None:
                        key = _column_name(name, "index-numeric", position=position)
                        row[col_of[key]] = float(value)

    return FeatureMatrix(
        columns=list(spec.columns),
        descriptors=list(spec.descriptors),
        values=values,
        labels=labels,
        row_ids=row_ids,
    )
