from datetime import datetime

import pytest

from ppmxplain.errors import DataError, InconsistentStaticError, UnknownAttributeError
from ppmxplain.log_model import (
    ColumnMapping,
    LabelRule,
    apply_labeling,
    compute_log_stats,
    derive_time_features,
    export_csv,
    ingest_csv,
)
from ppmxplain.synthetic import SYNTH_MAPPING, make_synthetic_log

MAPPING = ColumnMapping(
    case_id="case",
    activity="activity",
    timestamp="ts",
    static={"age": "numeric"},
    dynamic={"cost": "numeric"},
)


def write_csv(path, rows, header="case,activity,ts,age,cost"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")


def test_ingest_single_case(tmp_path):
    path = tmp_path / "log.csv"
    write_csv(
        path,
        [
            "c1,start,2024-01-01T08:00:00,30,1.5",
            "c1,work,2024-01-01T09:00:00,30,2.5",
            "c1,end,2024-01-01T10:00:00,30,",
        ],
    )
    log = ingest_csv(path, MAPPING)
    assert len(log) == 1
    trace = log.traces[0]
    assert trace.length == 3
    assert trace.activity_sequence() == ("start", "work", "end")
    assert trace.static_payload == {"age": 30.0}
    assert trace.events[2].payload["cost"] is None


def test_ingest_inconsistent_static(tmp_path):
    path = tmp_path / "log.csv"
    write_csv(
        path,
        [
            "c1,a,2024-01-01T08:00:00,30,1",
            "c1,b,2024-01-01T09:00:00,31,1",
        ],
    )
    with pytest.raises(InconsistentStaticError):
        ingest_csv(path, MAPPING)


def test_ingest_rejects_unmapped_and_missing_columns(tmp_path):
    path = tmp_path / "log.csv"
    write_csv(path, ["c1,a,2024-01-01T08:00:00,30,1,x"], header="case,activity,ts,age,cost,extra")
    with pytest.raises(DataError):
        ingest_csv(path, MAPPING)
    path2 = tmp_path / "log2.csv"
    write_csv(path2, ["c1,a,2024-01-01T08:00:00"], header="case,activity,ts")
    with pytest.raises(DataError):
        ingest_csv(path2, MAPPING)


def test_ingest_bad_timestamp(tmp_path):
    path = tmp_path / "log.csv"
    write_csv(path, ["c1,a,yesterday,30,1"])
    with pytest.raises(DataError):
        ingest_csv(path, MAPPING)


def test_ingest_sorts_by_timestamp_keeping_ties_in_file_order(tmp_path):
    path = tmp_path / "log.csv"
    write_csv(
        path,
        [
            "c1,second,2024-01-01T09:00:00,30,",
            "c1,first,2024-01-01T08:00:00,30,",
            "c1,tie_a,2024-01-01T09:00:00,30,",
        ],
    )
    log = ingest_csv(path, MAPPING)
    assert log.traces[0].activity_sequence() == ("first", "second", "tie_a")


def test_synthetic_case_count_through_ingest(tmp_path):
    log = make_synthetic_log(n_cases=776, seed=3)
    log = apply_labeling(log, LabelRule("activity-occurs", activity="act00"))
    path = tmp_path / "synth.csv"
    export_csv(log, path, SYNTH_MAPPING)
    back = ingest_csv(path, SYNTH_MAPPING)
    assert compute_log_stats(back).n_traces == 776


def test_roundtrip_export_ingest_identical(tmp_path):
    log = make_synthetic_log(n_cases=25, seed=1, null_amount_rate=0.2)
    log = apply_labeling(log, LabelRule("activity-occurs", activity="act01"))
    path = tmp_path / "log.csv"
    export_csv(log, path, SYNTH_MAPPING)
    back = ingest_csv(path, SYNTH_MAPPING)
    assert back.schema == log.schema
    assert back.traces == log.traces


# -- labeling ---------------------------------------------------------------


def test_vacuous_activity_rule_all_negative():
    log = make_synthetic_log(n_cases=30, seed=0)
    labeled = apply_labeling(log, LabelRule("activity-occurs", activity="never_happens"))
    assert labeled.positive_ratio() == 0.0


def test_duration_median_threshold_balances_labels():
    log = make_synthetic_log(n_cases=400, seed=7)
    durations = sorted(t.duration_minutes() for t in log)
    median = durations[len(durations) // 2]
    labeled = apply_labeling(log, LabelRule("duration-threshold", threshold=median))
    assert 0.4 <= labeled.positive_ratio() <= 0.6


def test_static_threshold_matches_generated_truth():
    log = make_synthetic_log(n_cases=500, seed=11)
    truth = sum(1 for t in log if t.static_payload["age"] > 50) / len(log)
    labeled = apply_labeling(
        log, LabelRule("static-attr-threshold", attribute="age", threshold=50)
    )
    assert labeled.positive_ratio() == truth


def test_rule_unknown_attribute_errors():
    log = make_synthetic_log(n_cases=5, seed=0)
    with pytest.raises(UnknownAttributeError):
        apply_labeling(
            log, LabelRule("static-attr-threshold", attribute="nope", threshold=1)
        )


def test_negated_rule_flips_classes():
    log = make_synthetic_log(n_cases=100, seed=2, marker_activity="mk", marker_rate=0.5)
    pos = apply_labeling(log, LabelRule("activity-occurs", activity="mk"))
    neg = apply_labeling(log, LabelRule("activity-occurs", activity="mk", negate=True))
    assert pos.positive_ratio() + neg.positive_ratio() == pytest.approx(1.0)


# -- time features ----------------------------------------------------------


def make_two_event_log(tmp_path):
    path = tmp_path / "log.csv"
    write_csv(
        path,
        [
            "c1,a,2024-03-08T14:30:00,30,",
            "c1,b,2024-03-08T14:31:00,30,",
        ],
    )
    return ingest_csv(path, MAPPING)


def test_time_feature_values(tmp_path):
    log = derive_time_features(make_two_event_log(tmp_path))
    first, second = log.traces[0].events
    assert first.payload["hour"] == 14.0
    assert first.payload["timesincemidnight"] == 870.0
    assert first.payload["timesincelastevent"] == 0.0
    assert first.payload["timesincecasestart"] == 0.0
    assert first.payload["event_nr"] == 1.0
    assert first.payload["weekday"] == 4.0  # 2024-03-08 is a Friday
    assert first.payload["month"] == 3.0
    assert second.payload["timesincelastevent"] == 1.0
    assert second.payload["event_nr"] == 2.0


def test_time_features_idempotent():
    log = make_synthetic_log(n_cases=20, seed=4)
    once = derive_time_features(log)
    twice = derive_time_features(once)
    assert once == twice


def test_timesincecasestart_is_prefix_sum_of_gaps():
    log = derive_time_features(make_synthetic_log(n_cases=40, seed=5))
    for trace in log:
        running = 0.0
        for event in trace.events:
            running += event.payload["timesincelastevent"]
            assert event.payload["timesincecasestart"] == pytest.approx(running)


# -- statistics -------------------------------------------------------------


def two_trace_log(tmp_path):
    path = tmp_path / "log.csv"
    write_csv(
        path,
        [
            "c1,a,2024-01-01T08:00:00,30,",
            "c1,b,2024-01-01T09:00:00,30,",
            "c1,c,2024-01-01T10:00:00,30,",
            "c2,a,2024-01-02T08:00:00,40,",
            "c2,b,2024-01-02T09:00:00,40,",
            "c2,c,2024-01-02T10:00:00,40,",
            "c2,d,2024-01-02T11:00:00,40,",
            "c2,e,2024-01-02T12:00:00,40,",
        ],
    )
    return ingest_csv(path, MAPPING)


def test_log_stats_lengths_and_variants(tmp_path):
    log = apply_labeling(
        two_trace_log(tmp_path), LabelRule("activity-occurs", activity="d")
    )
    stats = compute_log_stats(log)
    assert stats.shortest_length == 3
    assert stats.longest_length == 5
    assert stats.avg_length == 4.0
    assert stats.n_trace_variants == 2
    assert stats.positive_ratio == 0.5
    assert stats.n_event_classes == 5


def test_identical_sequences_one_variant():
    log = make_synthetic_log(n_cases=2, min_length=3, max_length=3, n_activities=1, seed=0)
    log = apply_labeling(log, LabelRule("activity-occurs", activity="act00"))
    assert compute_log_stats(log).n_trace_variants == 1


def test_stats_require_labels():
    log = make_synthetic_log(n_cases=3, seed=0)
    with pytest.raises(DataError):
        compute_log_stats(log)


def test_positive_ratio_exact():
    log = make_synthetic_log(n_cases=64, seed=9, marker_activity="mk", marker_rate=0.4)
    labeled = apply_labeling(log, LabelRule("activity-occurs", activity="mk"))
    positives = sum(1 for t in labeled if t.label == 1)
    assert compute_log_stats(labeled).positive_ratio == positives / 64
