"""Event-log data model: CSV ingestion, labeling, time features and log statistics.

An event log is a collection of traces. Each trace is the ordered event
history of one case and carries case-level (static) attributes plus
event-level (dynamic) payloads. Traces optionally hold a binary outcome
label assigned by a :class:`LabelRule`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from typing import Mapping, Optional

from .errors import (
    ConfigError,
    DataError,
    InconsistentStaticError,
    UnknownAttributeError,
)

STATIC = "static"
DYNAMIC = "dynamic"
CATEGORICAL = "categorical"
NUMERIC = "numeric"

#: Dynamic numeric features added by :func:`derive_time_features`, in column order.
TIME_FEATURES = (
    "hour",
    "weekday",
    "month",
    "timesincemidnight",
    "timesincelastevent",
    "timesincecasestart",
    "event_nr",
)


@dataclass(frozen=True)
class Attribute:
    """One payload attribute: its name, scope (static/dynamic) and dtype."""

    name: str
    scope: str
    dtype: str

    def __post_init__(self):
        if self.scope not in (STATIC, DYNAMIC):
            raise ConfigError(f"bad attribute scope {self.scope!r} for {self.name!r}")
        if self.dtype not in (CATEGORICAL, NUMERIC):
            raise ConfigError(f"bad attribute dtype {self.dtype!r} for {self.name!r}")


@dataclass(frozen=True)
class LogSchema:
    """Column roles of a log: the three mandatory columns plus payload attributes.

    Exactly one column is the case identifier, one the activity (the event
    class, a categorical dynamic attribute) and one the timestamp. All other
    columns are payload attributes with an explicit scope and dtype.
    """

    case_id: str
    activity: str
    timestamp: str
    attributes: tuple[Attribute, ...] = ()

    def __post_init__(self):
        names = [self.case_id, self.activity, self.timestamp]
        names += [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate column names in schema: {names}")

    def static_attributes(self) -> tuple[Attribute, ...]:
        return tuple(a for a in self.attributes if a.scope == STATIC)

    def dynamic_attributes(self) -> tuple[Attribute, ...]:
        return tuple(a for a in self.attributes if a.scope == DYNAMIC)

    def attribute(self, name: str) -> Attribute:
        for a in self.attributes:
            if a.name == name:
                return a
        raise UnknownAttributeError(f"schema has no attribute {name!r}")

    def has_attribute(self, name: str) -> bool:
        return any(a.name == name for a in self.attributes)

    def with_attribute(self, attr: Attribute) -> "LogSchema":
        if self.has_attribute(attr.name):
            existing = self.attribute(attr.name)
            if existing != attr:
                raise DataError(
                    f"attribute {attr.name!r} already defined as "
                    f"{existing.scope}/{existing.dtype}"
                )
            return self
        return replace(self, attributes=self.attributes + (attr,))


@dataclass(frozen=True)
class Event:
    activity: str
    timestamp: datetime
    payload: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Trace:
    case_id: str
    static_payload: Mapping[str, object]
    events: tuple[Event, ...]
    label: Optional[int] = None

    def __post_init__(self):
        if len(self.events) < 1:
            raise DataError(f"trace {self.case_id!r} has no events")

    @property
    def length(self) -> int:
        return len(self.events)

    def start_time(self) -> datetime:
        return self.events[0].timestamp

    def duration_minutes(self) -> float:
        delta = self.events[-1].timestamp - self.events[0].timestamp
        return delta.total_seconds() / 60.0

    def activity_sequence(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)


@dataclass(frozen=True)
class EventLog:
    """Immutable set of traces sharing one schema, keyed by case id."""

    schema: LogSchema
    traces: tuple[Trace, ...]

    def __post_init__(self):
        ids = [t.case_id for t in self.traces]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate case ids in event log")

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def is_labeled(self) -> bool:
        return all(t.label is not None for t in self.traces)

    def positive_ratio(self) -> float:
        if not self.traces:
            return 0.0
        return sum(1 for t in self.traces if t.label == 1) / len(self.traces)


# ---------------------------------------------------------------------------
# Column mapping and CSV I/O
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnMapping:
    """Declarative description of how CSV columns map onto the log schema.

    ``static`` and ``dynamic`` map column name to dtype ("categorical" or
    "numeric"). ``label`` optionally names a 0/1 outcome column.
    ``timestamp_format`` is a ``strptime`` format string; ``None`` means
    ISO-8601.
    """

    case_id: str
    activity: str
    timestamp: str
    static: Mapping[str, str] = field(default_factory=dict)
    dynamic: Mapping[str, str] = field(default_factory=dict)
    label: Optional[str] = None
    timestamp_format: Optional[str] = None
    min_trace_length: int = 1

    def schema(self) -> LogSchema:
        attrs = [Attribute(n, STATIC, d) for n, d in self.static.items()]
        attrs += [Attribute(n, DYNAMIC, d) for n, d in self.dynamic.items()]
        return LogSchema(self.case_id, self.activity, self.timestamp, tuple(attrs))

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "activity": self.activity,
            "timestamp": self.timestamp,
            "static": dict(self.static),
            "dynamic": dict(self.dynamic),
            "label": self.label,
            "timestamp_format": self.timestamp_format,
            "min_trace_length": self.min_trace_length,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ColumnMapping":
        try:
            return cls(
                case_id=d["case_id"],
                activity=d["activity"],
                timestamp=d["timestamp"],
                static=dict(d.get("static", {})),
                dynamic=dict(d.get("dynamic", {})),
                label=d.get("label"),
                timestamp_format=d.get("timestamp_format"),
                min_trace_length=int(d.get("min_trace_length", 1)),
            )
        except KeyError as exc:
            raise ConfigError(f"column mapping is missing key {exc}") from exc

    def parse_timestamp(self, raw: str) -> datetime:
        if self.timestamp_format is None:
            return datetime.fromisoformat(raw)
        return datetime.strptime(raw, self.timestamp_format)

    def format_timestamp(self, ts: datetime) -> str:
        if self.timestamp_format is None:
            return ts.isoformat()
        return ts.strftime(self.timestamp_format)


def _parse_value(raw: str, dtype: str, column: str, line_no: int):
    if raw == "":
        return None
    if dtype == NUMERIC:
        try:
            return float(raw)
        except ValueError as exc:
            raise DataError(
                f"line {line_no}: cannot parse {raw!r} in numeric column {column!r}"
            ) from exc
    return raw


def ingest_csv(path, mapping: ColumnMapping) -> EventLog:
    """Read a UTF-8 CSV with header row into an :class:`EventLog`.

    One trace per distinct case id (first-appearance order), events sorted by
    timestamp with ties keeping file order. A static column whose value varies
    within a case raises :class:`InconsistentStaticError`.
    """
    schema = mapping.schema()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file, header row required")
        header = list(reader.fieldnames)
        mandatory = [mapping.case_id, mapping.activity, mapping.timestamp]
        if mapping.label is not None:
            mandatory.append(mapping.label)
        declared = set(mandatory) | set(mapping.static) | set(mapping.dynamic)
        for col in mandatory + list(mapping.static) + list(mapping.dynamic):
            if col not in header:
                raise DataError(f"{path}: mandatory column {col!r} missing from header")
        unclassified = [c for c in header if c not in declared]
        if unclassified:
            raise DataError(
                f"{path}: columns {unclassified} are not classified in the mapping"
            )

        order: list[str] = []
        statics: dict[str, dict] = {}
        labels: dict[str, Optional[int]] = {}
        events: dict[str, list[tuple[datetime, int, Event]]] = {}
        for line_no, row in enumerate(reader, start=2):
            case = row[mapping.case_id]
            try:
                ts = mapping.parse_timestamp(row[mapping.timestamp])
            except ValueError as exc:
                raise DataError(
                    f"{path} line {line_no}: unparsable timestamp "
                    f"{row[mapping.timestamp]!r}"
                ) from exc
            payload = {
                name: _parse_value(row[name], dtype, name, line_no)
                for name, dtype in mapping.dynamic.items()
            }
            static_row = {
                name: _parse_value(row[name], dtype, name, line_no)
                for name, dtype in mapping.static.items()
            }
            label = None
            if mapping.label is not None:
                raw = row[mapping.label]
                if raw != "":
                    if raw not in ("0", "1"):
                        raise DataError(
                            f"{path} line {line_no}: label must be 0 or 1, got {raw!r}"
                        )
                    label = int(raw)

            if case not in statics:
                order.append(case)
                statics[case] = static_row
                labels[case] = label
                events[case] = []
            else:
                for name, value in static_row.items():
                    if statics[case][name] != value:
                        raise InconsistentStaticError(
                            f"{path} line {line_no}: static column {name!r} changes "
                            f"within case {case!r} "
                            f"({statics[case][name]!r} -> {value!r})"
                        )
                if label is not None and labels[case] not in (None, label):
                    raise DataError(
                        f"{path} line {line_no}: conflicting labels for case {case!r}"
                    )
                if label is not None:
                    labels[case] = label
            events[case].append(
                (ts, len(events[case]), Event(row[mapping.activity], ts, payload))
            )

    traces = []
    for case in order:
        evs = [e for _, _, e in sorted(events[case], key=lambda t: (t[0], t[1]))]
        if len(evs) < mapping.min_trace_length:
            continue
        traces.append(Trace(case, statics[case], tuple(evs), labels[case]))
    if not traces:
        raise DataError(f"{path}: no traces after ingestion")
    return EventLog(schema, tuple(traces))


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_csv(log: EventLog, path, mapping: ColumnMapping) -> None:
    """Write a log back to CSV in the same shape :func:`ingest_csv` reads."""
    static_cols = list(mapping.static)
    dynamic_cols = list(mapping.dynamic)
    header = [mapping.case_id, mapping.activity, mapping.timestamp]
    if mapping.label is not None:
        header.append(mapping.label)
    header += static_cols + dynamic_cols
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for trace in log:
            for event in trace.events:
                row = [
                    trace.case_id,
                    event.activity,
                    mapping.format_timestamp(event.timestamp),
                ]
                if mapping.label is not None:
                    row.append("" if trace.label is None else str(trace.label))
                row += [_format_value(trace.static_payload.get(c)) for c in static_cols]
                row += [_format_value(event.payload.get(c)) for c in dynamic_cols]
                writer.writerow(row)


# ---------------------------------------------------------------------------
# Labeling
# ---------------------------------------------------------------------------

LABEL_KINDS = (
    "activity-occurs",
    "static-attr-threshold",
    "dynamic-attr-threshold",
    "duration-threshold",
)


@dataclass(frozen=True)
class LabelRule:
    """Total predicate mapping every trace to a binary outcome.

    Kinds:
      * ``activity-occurs``: positive if any event has ``activity``.
      * ``static-attr-threshold``: positive if static ``attribute`` > ``threshold``.
      * ``dynamic-attr-threshold``: positive if any event value of
        ``attribute`` > ``threshold`` (nulls compare negative).
      * ``duration-threshold``: positive if trace duration in minutes
        > ``threshold``.

    ``negate`` flips the positive class.
    """

    kind: str
    activity: Optional[str] = None
    attribute: Optional[str] = None
    threshold: Optional[float] = None
    negate: bool = False

    def __post_init__(self):
        if self.kind not in LABEL_KINDS:
            raise ConfigError(f"unknown label rule kind {self.kind!r}")
        if self.kind == "activity-occurs" and self.activity is None:
            raise ConfigError("activity-occurs rule needs an activity")
        if self.kind.endswith("attr-threshold") and (
            self.attribute is None or self.threshold is None
        ):
            raise ConfigError(f"{self.kind} rule needs attribute and threshold")
        if self.kind == "duration-threshold" and self.threshold is None:
            raise ConfigError("duration-threshold rule needs a threshold")

    def validate(self, schema: LogSchema) -> None:
        if self.attribute is not None:
            attr = schema.attribute(self.attribute)  # raises UnknownAttributeError
            expected = STATIC if self.kind == "static-attr-threshold" else DYNAMIC
            if attr.scope != expected:
                raise UnknownAttributeError(
                    f"rule {self.kind} needs a {expected} attribute, "
                    f"{self.attribute!r} is {attr.scope}"
                )

    def outcome(self, trace: Trace) -> int:
        if self.kind == "activity-occurs":
            hit = any(e.activity == self.activity for e in trace.events)
        elif self.kind == "static-attr-threshold":
            value = trace.static_payload.get(self.attribute)
            hit = value is not None and float(value) > self.threshold
        elif self.kind == "dynamic-attr-threshold":
            hit = any(
                e.payload.get(self.attribute) is not None
                and float(e.payload[self.attribute]) > self.threshold
                for e in trace.events
            )
        else:  # duration-threshold
            hit = trace.duration_minutes() > self.threshold
        if self.negate:
            hit = not hit
        return int(hit)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "activity": self.activity,
            "attribute": self.attribute,
            "threshold": self.threshold,
            "negate": self.negate,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "LabelRule":
        if "kind" not in d:
            raise ConfigError("label rule needs a 'kind'")
        return cls(
            kind=d["kind"],
            activity=d.get("activity"),
            attribute=d.get("attribute"),
            threshold=d.get("threshold"),
            negate=bool(d.get("negate", False)),
        )


def apply_labeling(log: EventLog, rule: LabelRule) -> EventLog:
    """Return a copy of the log with every trace labeled by ``rule``."""
    rule.validate(log.schema)
    traces = tuple(replace(t, label=rule.outcome(t)) for t in log)
    return EventLog(log.schema, traces)


# ---------------------------------------------------------------------------
# Derived time features
# ---------------------------------------------------------------------------


def _minutes(delta: timedelta) -> float:
    return delta.total_seconds() / 60.0


def derive_time_features(log: EventLog) -> EventLog:
    """Add the dynamic numeric time features in :data:`TIME_FEATURES` per event.

    Idempotent: a second application recomputes identical values. Existing
    attributes with the same name must already be dynamic numeric.
    """
    schema = log.schema
    for name in TIME_FEATURES:
        schema = schema.with_attribute(Attribute(name, DYNAMIC, NUMERIC))

    traces = []
    for trace in log:
        start = trace.events[0].timestamp
        prev = start
        new_events = []
        for nr, event in enumerate(trace.events, start=1):
            ts = event.timestamp
            midnight = ts.replace(hour=0, minute=0, second=0, microsecond=0)
            payload = dict(event.payload)
            payload["hour"] = float(ts.hour)
            payload["weekday"] = float(ts.weekday())
            payload["month"] = float(ts.month)
            payload["timesincemidnight"] = _minutes(ts - midnight)
            payload["timesincelastevent"] = _minutes(ts - prev)
            payload["timesincecasestart"] = _minutes(ts - start)
            payload["event_nr"] = float(nr)
            new_events.append(replace(event, payload=payload))
            prev = ts
        traces.append(replace(trace, events=tuple(new_events)))
    return EventLog(schema, tuple(traces))


# ---------------------------------------------------------------------------
# Log statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogStats:
    n_traces: int
    shortest_length: int
    avg_length: float
    longest_length: int
    n_trace_variants: int
    positive_ratio: float
    n_event_classes: int
    n_static_attrs: int
    n_dynamic_attrs: int
    n_categorical_attrs: int
    n_numeric_attrs: int
    n_static_categorical_levels: int
    n_dynamic_categorical_levels: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def compute_log_stats(log: EventLog) -> LogStats:
    """Summary statistics of a labeled log (counts exclude the three mandatory columns)."""
    if not log.is_labeled():
        raise DataError("log statistics require a fully labeled log")
    lengths = [t.length for t in log]
    variants = {t.activity_sequence() for t in log}
    activities = {e.activity for t in log for e in t.events}

    static_attrs = log.schema.static_attributes()
    dynamic_attrs = log.schema.dynamic_attributes()
    static_levels = 0
    for attr in static_attrs:
        if attr.dtype != CATEGORICAL:
            continue
        static_levels += len(
            {t.static_payload.get(attr.name) for t in log}
            - {None}
        )
    dynamic_levels = 0
    for attr in dynamic_attrs:
        if attr.dtype != CATEGORICAL:
            continue
        dynamic_levels += len(
            {e.payload.get(attr.name) for t in log for e in t.events} - {None}
        )

    n_categorical = sum(1 for a in log.schema.attributes if a.dtype == CATEGORICAL)
    n_numeric = sum(1 for a in log.schema.attributes if a.dtype == NUMERIC)
    return LogStats(
        n_traces=len(log),
        shortest_length=min(lengths),
        avg_length=sum(lengths) / len(lengths),
        longest_length=max(lengths),
        n_trace_variants=len(variants),
        positive_ratio=log.positive_ratio(),
        n_event_classes=len(activities),
        n_static_attrs=len(static_attrs),
        n_dynamic_attrs=len(dynamic_attrs),
        n_categorical_attrs=n_categorical,
        n_numeric_attrs=n_numeric,
        n_static_categorical_levels=static_levels,
        n_dynamic_categorical_levels=dynamic_levels,
    )
