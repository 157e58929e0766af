"""Gap-based prefix extraction.

A prefix log materializes, for every trace, the contiguous heads at
gap-spaced lengths 1, 1+g, 1+2g, ... capped by both the trace length and a
maximum prefix length. Prefixes inherit the full-trace outcome label.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import ConfigError, DataError
from .log_model import ColumnMapping, Event, EventLog, LogSchema, Trace


@dataclass(frozen=True)
class PrefixTrace:
    base_case_id: str
    prefix_length: int
    events: tuple[Event, ...]
    static_payload: Mapping[str, object]
    label: Optional[int]

    def __post_init__(self):
        if self.prefix_length != len(self.events):
            raise DataError("prefix_length must equal the number of events")

    @property
    def prefix_id(self) -> str:
        return f"{self.base_case_id}::{self.prefix_length}"


@dataclass(frozen=True)
class PrefixLog:
    prefixes: tuple[PrefixTrace, ...]
    gap: int
    max_length: int
    schema: LogSchema

    def __len__(self) -> int:
        return len(self.prefixes)

    def __iter__(self):
        return iter(self.prefixes)

    def realized_lengths(self) -> tuple[int, ...]:
        return tuple(sorted({p.prefix_length for p in self.prefixes}))


def prefix_lengths(n: int, gap: int, max_length: int) -> list[int]:
    """Lengths at which prefixes of a length-``n`` trace are materialized."""
    if n < 1 or gap < 1 or max_length < 1:
        raise ConfigError("trace length, gap and max length must all be >= 1")
    cap = min(n, max_length)
    return list(range(1, cap + 1, gap))


def prefix_count(n: int, gap: int, max_length: int) -> int:
    """Closed form for ``len(prefix_lengths(n, gap, max_length))``."""
    if n < 1 or gap < 1 or max_length < 1:
        raise ConfigError("trace length, gap and max length must all be >= 1")
    return (min(n, max_length) - 1) // gap + 1


def generate_prefix_log(log: EventLog, gap: int = 5, max_length: int = 20) -> PrefixLog:
    """Build the prefix log of ``log`` under (``gap``, ``max_length``).

    Output order is canonical: case id ascending, then prefix length
    ascending. Requires a labeled, non-empty log.
    """
    if gap < 1 or max_length < 1:
        raise ConfigError("gap and max prefix length must be >= 1")
    if len(log) == 0:
        raise DataError("cannot generate prefixes from an empty log")
    if not log.is_labeled():
        raise DataError("prefix generation requires a labeled log")

    prefixes = []
    for trace in sorted(log, key=lambda t: t.case_id):
        for length in prefix_lengths(trace.length, gap, max_length):
            prefixes.append(
                PrefixTrace(
                    base_case_id=trace.case_id,
                    prefix_length=length,
                    events=trace.events[:length],
                    static_payload=trace.static_payload,
                    label=trace.label,
                )
            )
    return PrefixLog(tuple(prefixes), gap, max_length, log.schema)


def export_prefix_csv(plog: PrefixLog, path, mapping: ColumnMapping) -> None:
    """Serialize a prefix log to CSV: the event-log schema plus
    ``base_case_id`` and ``prefix_length`` columns."""
    from .log_model import export_csv

    traces = tuple(
        Trace(p.prefix_id, p.static_payload, p.events, p.label) for p in plog
    )
    log = EventLog(plog.schema, traces)
    export_csv(log, path, mapping)
    # splice the two extra columns in front of the exported rows
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    rows[0] = ["base_case_id", "prefix_length"] + rows[0]
    body = iter(rows[1:])
    out = [rows[0]]
    for prefix in plog:
        for _ in prefix.events:
            out.append([prefix.base_case_id, str(prefix.prefix_length)] + next(body))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh).writerows(out)


def prefix_manifest(plog: PrefixLog) -> dict:
    """Per-length prefix counts and label balance, for the run report."""
    per_length: dict[int, dict] = {}
    for p in plog:
        entry = per_length.setdefault(
            p.prefix_length, {"count": 0, "positive": 0}
        )
        entry["count"] += 1
        entry["positive"] += int(p.label == 1)
    return {
        "gap": plog.gap,
        "max_length": plog.max_length,
        "total_prefixes": len(plog),
        "lengths": {
            str(length): per_length[length] for length in sorted(per_length)
        },
    }
