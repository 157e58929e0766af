"""Deterministic synthetic event-log generator for demos and tests.

Generates logs with the usual mixed shape: a categorical and a numeric
static attribute, a categorical and a (zero-inflated, optionally null-ridden)
numeric dynamic attribute, and configurable trace lengths. A marker activity
can be planted into a controlled fraction of traces so that an
activity-occurrence label has a known ground truth. With ``whole_hours`` all
timestamps fall on exact hours, which makes the derived ``timesincemidnight``
an exact multiple of ``hour``.
"""

from __future__ import annotations

from datetime import datetime, timedelta
from typing import Optional

import numpy as np

from .log_model import (
    CATEGORICAL,
    DYNAMIC,
    NUMERIC,
    STATIC,
    Attribute,
    ColumnMapping,
    Event,
    EventLog,
    LogSchema,
    Trace,
)

SYNTH_MAPPING = ColumnMapping(
    case_id="case_id",
    activity="activity",
    timestamp="timestamp",
    static={"department": CATEGORICAL, "age": NUMERIC},
    dynamic={"resource": CATEGORICAL, "amount": NUMERIC},
    label="outcome",
)


def make_synthetic_log(
    n_cases: int = 200,
    n_activities: int = 8,
    min_length: int = 2,
    max_length: int = 12,
    n_departments: int = 4,
    n_resources: int = 5,
    marker_activity: Optional[str] = None,
    marker_rate: float = 0.5,
    whole_hours: bool = False,
    zero_amount_rate: float = 0.3,
    null_amount_rate: float = 0.0,
    seed: int = 0,
) -> EventLog:
    rng = np.random.default_rng(seed)
    activities = [f"act{i:02d}" for i in range(n_activities)]
    sampled_activities = activities
    if marker_activity is not None:
        if marker_activity not in activities:
            activities = activities[:-1] + [marker_activity]
        sampled_activities = [a for a in activities if a != marker_activity]
    departments = [f"dept{i}" for i in range(n_departments)]
    resources = [f"res{i:02d}" for i in range(n_resources)]

    schema = LogSchema(
        case_id="case_id",
        activity="activity",
        timestamp="timestamp",
        attributes=(
            Attribute("department", STATIC, CATEGORICAL),
            Attribute("age", STATIC, NUMERIC),
            Attribute("resource", DYNAMIC, CATEGORICAL),
            Attribute("amount", DYNAMIC, NUMERIC),
        ),
    )

    base = datetime(2024, 1, 6, 0, 0, 0)
    traces = []
    for i in range(n_cases):
        length = int(rng.integers(min_length, max_length + 1))
        acts = [str(rng.choice(sampled_activities)) for _ in range(length)]
        if marker_activity is not None and rng.random() < marker_rate:
            acts[int(rng.integers(0, length))] = marker_activity

        if whole_hours:
            start = base + timedelta(hours=5 * i)
            gaps = [timedelta(hours=int(g)) for g in rng.integers(1, 6, size=length)]
        else:
            start = base + timedelta(minutes=311 * i)
            gaps = [
                timedelta(minutes=float(g)) for g in rng.uniform(5.0, 600.0, size=length)
            ]

        static_payload = {
            "department": str(rng.choice(departments)),
            "age": float(rng.integers(18, 91)),
        }
        events = []
        ts = start
        for k in range(length):
            if k > 0:
                ts = ts + gaps[k]
            amount: Optional[float]
            if null_amount_rate > 0 and rng.random() < null_amount_rate:
                amount = None
            elif rng.random() < zero_amount_rate:
                amount = 0.0
            else:
                amount = float(np.round(rng.uniform(1.0, 1000.0), 2))
            events.append(
                Event(
                    activity=acts[k],
                    timestamp=ts,
                    payload={"resource": str(rng.choice(resources)), "amount": amount},
                )
            )
        traces.append(Trace(f"case{i:05d}", static_payload, tuple(events)))
    return EventLog(schema, tuple(traces))
