"""End-to-end experiment execution and artifact persistence.

A run executes ingest -> label -> time features -> split -> prefix -> bucket,
then per trainable bucket: fit-encode the training side, transform the test
side, train the model, evaluate, profile, compute correlations and mutual
information, and run the configured explanation methods. Every artifact is a
deterministic function of (config, seed): reports are JSON/CSV with stable
key order and repr-exact floats, and the manifest records a SHA-256 per file.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .. import bucketing as bkt
from .._rand import rng_stream
from ..encoding import FeatureMatrix, expected_width, fit_encoder, transform
from ..errors import DataError, ExplainError, PipelineError, TrainingError
from ..explain import (
    permutation_importance,
    sample_background,
    shap_global,
    shap_linear,
    shap_tree,
)
from ..log_model import (
    EventLog,
    apply_labeling,
    compute_log_stats,
    derive_time_features,
    ingest_csv,
)
from ..models import (
    evaluate,
    gbt_importance,
    lr_coefficients,
    train_gbt,
    train_logreg,
)
from ..models.importance import GBT_CRITERIA
from ..prefixing import generate_prefix_log, prefix_manifest
from ..profiling import DataTable, cramers_v_matrix, mutual_info, pearson_matrix, profile
from ..stability import RunFingerprint, agreement_with_mi, collinearity_scan
from .config import RANDOM, GridSpec, RunConfig


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _report_writer(config_hash: str):
    def emit(path, payload: dict) -> None:
        write_json(path, {"config_hash": config_hash, **payload})

    return emit


def _file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def split_log(log: EventLog, config: RunConfig) -> tuple[EventLog, EventLog]:
    """Temporal 80/20 by case start time (default) or a seeded random split."""
    traces = list(log)
    if config.split_kind == RANDOM:
        rng = rng_stream(config.seed, "split")
        order = rng.permutation(len(traces))
        traces = [traces[i] for i in order]
    else:
        traces.sort(key=lambda t: (t.start_time(), t.case_id))
    cut = int(round(len(traces) * config.train_fraction))
    train, test = traces[:cut], traces[cut:]
    if not train or not test:
        raise DataError(
            f"split produced an empty side (train={len(train)}, test={len(test)})"
        )
    return EventLog(log.schema, tuple(train)), EventLog(log.schema, tuple(test))


@dataclass
class RunArtifacts:
    directory: Path
    run_id: str
    manifest: dict

    def path(self, name: str) -> Path:
        return self.directory / name


class _Stage:
    """Tags exceptions with the pipeline stage they occurred in."""

    def __init__(self, name: str, status: dict):
        self.name = name
        self.status = status

    def __enter__(self):
        self.status["stage"] = self.name
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, PipelineError):
            self.status["error"] = f"{self.name}: {exc}"
        return False


def _write_matrix(directory: Path, name: str, matrix: FeatureMatrix) -> None:
    matrix.to_csv(directory / f"{name}.csv")


def _shap_points_csv(path, report) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", "column", "feature_value", "phi"])
        for row_id, column, value, phi in report.per_point_rows():
            writer.writerow([row_id, column, repr(value), repr(phi)])


def _explain_shap(model, matrix, train_matrix, config, dataset: str):
    """Build one SHAP explainer for one dataset; background statistics always
    come from the training split, but each explainer samples independently."""
    if model_kind(model) == "logreg":
        attributions = shap_linear(model, matrix)
        provenance = {
            "explains": dataset,
            "background": "train-column-means",
            "explainer": "linear-exact",
        }
    else:
        background = sample_background(
            train_matrix,
            size=config.background_size,
            seed=config.seed,
            tag=f"background-{dataset}",
        )
        attributions = shap_tree(
            model,
            matrix,
            background,
            max_instances=config.shap_max_instances,
            seed=config.seed,
        )
        provenance = {
            "explains": dataset,
            "background": "train-sample",
            "background_size": int(len(background)),
            "explainer": "tree-interventional",
        }
    return shap_global(attributions, model.columns, provenance=provenance)


def model_kind(model) -> str:
    return "logreg" if hasattr(model, "weights") else "gbt"


def _process_bucket(
    bucket_dir: Path,
    train_prefixes,
    test_prefixes,
    schema,
    config: RunConfig,
    emit,
) -> dict[str, object]:
    """Encode, train, evaluate, profile and explain one bucket.

    Returns the per-method importance vectors for the run fingerprint.
    """
    bucket_dir.mkdir(parents=True, exist_ok=True)
    spec = fit_encoder(train_prefixes, config.encoding, schema)
    write_json(bucket_dir / "encoder.json", spec.to_dict())

    train_matrix = transform(spec, train_prefixes)
    if train_matrix.n_columns != expected_width(spec):
        raise DataError(
            f"encoded width {train_matrix.n_columns} does not match the "
            f"expected {expected_width(spec)}"
        )
    _write_matrix(bucket_dir, "train_matrix", train_matrix)
    test_matrix = None
    if test_prefixes:
        test_matrix = transform(spec, test_prefixes)
        _write_matrix(bucket_dir, "test_matrix", test_matrix)

    if config.model.model == "logreg":
        model = train_logreg(train_matrix, config.model)
    else:
        model = train_gbt(train_matrix, config.model)
    write_json(bucket_dir / "model.json", model.to_dict())

    evaluation = {"train": evaluate(model, train_matrix).to_dict()}
    if test_matrix is not None:
        evaluation["test"] = evaluate(model, test_matrix).to_dict()
    emit(bucket_dir / "eval.json", evaluation)

    emit(
        bucket_dir / "profile_train.json",
        profile(DataTable.from_matrix(train_matrix)).to_dict(),
    )
    if test_matrix is not None:
        emit(
            bucket_dir / "profile_test.json",
            profile(DataTable.from_matrix(test_matrix)).to_dict(),
        )
    train_table = DataTable.from_matrix(train_matrix)
    corr = pearson_matrix(train_table)
    emit(bucket_dir / "pearson_train.json", corr.to_dict())
    corr.to_csv(bucket_dir / "pearson_train.csv")
    mi = mutual_info(train_table, bins=config.mi_bins, k=config.top_k)
    emit(bucket_dir / "mi_train.json", mi.to_dict())

    vectors = {}
    if config.model.model == "logreg":
        vectors["lr-coef"] = lr_coefficients(model)
    else:
        for criterion in GBT_CRITERIA:
            iv = gbt_importance(model, criterion)
            vectors[iv.method] = iv

    if "pfi" in config.xai:
        for dataset, matrix in (("train", train_matrix), ("test", test_matrix)):
            if matrix is None:
                continue
            try:
                report = permutation_importance(
                    model,
                    matrix,
                    n_iter=config.pfi_iterations,
                    seed=config.seed,
                    dataset=dataset,
                )
            except ExplainError as exc:
                emit(
                    bucket_dir / f"pfi_{dataset}.json",
                    {"method": "pfi", "dataset": dataset, "skipped": str(exc)},
                )
                continue
            emit(bucket_dir / f"pfi_{dataset}.json", report.to_dict())
            if dataset == "train":
                vectors["pfi"] = report.importance_vector()

    if "shap" in config.xai:
        for dataset, matrix in (("train", train_matrix), ("test", test_matrix)):
            if matrix is None:
                continue
            report = _explain_shap(model, matrix, train_matrix, config, dataset)
            emit(bucket_dir / f"shap_{dataset}.json", report.to_dict())
            _shap_points_csv(bucket_dir / f"shap_{dataset}_points.csv", report)
            if dataset == "train":
                vectors["shap-global"] = report.importance_vector()

    agreements = {
        method: agreement_with_mi(iv, mi, k=config.top_k).to_dict()
        for method, iv in sorted(vectors.items())
    }
    emit(bucket_dir / "agreement_mi.json", agreements)
    flags = {
        method: [
            f.to_dict()
            for f in collinearity_scan(
                iv, corr, k=config.top_k, threshold=config.collinearity_threshold
            )
        ]
        for method, iv in sorted(vectors.items())
    }
    emit(bucket_dir / "collinearity.json", flags)
    return vectors


def run_experiment(config: RunConfig, out_dir) -> RunArtifacts:
    """Execute one pipeline run into ``out_dir/<run_id>/``.

    Raises a stage-tagged :class:`PipelineError` subclass on failure after
    writing a partial manifest.
    """
    run_dir = Path(out_dir) / config.run_id()
    run_dir.mkdir(parents=True, exist_ok=True)
    status: dict = {"run_id": config.run_id(), "stage": "config"}

    config_payload = config.to_dict()
    config_payload["config_hash"] = config.config_hash()
    write_json(run_dir / "config.json", config_payload)
    emit = _report_writer(config.config_hash())

    bucket_status: list[dict] = []
    try:
        with _Stage("data", status):
            log = ingest_csv(config.log_path, config.mapping)
            log = apply_labeling(log, config.label_rule)
            if config.derive_time:
                log = derive_time_features(log)
            emit(run_dir / "log_stats.json", compute_log_stats(log).to_dict())

            raw_table = DataTable.from_log(log)
            emit(run_dir / "raw_profile.json", profile(raw_table).to_dict())
            raw_pearson = pearson_matrix(raw_table)
            emit(run_dir / "raw_pearson.json", raw_pearson.to_dict())
            raw_pearson.to_csv(run_dir / "raw_pearson.csv")
            raw_cramers = cramers_v_matrix(raw_table)
            emit(run_dir / "raw_cramers.json", raw_cramers.to_dict())
            raw_cramers.to_csv(run_dir / "raw_cramers.csv")
            emit(
                run_dir / "raw_mi.json",
                mutual_info(raw_table, bins=config.mi_bins, k=config.top_k).to_dict(),
            )

            train_log, test_log = split_log(log, config)
            train_plog = generate_prefix_log(
                train_log, config.gap, config.max_prefix_length
            )
            test_plog = generate_prefix_log(
                test_log, config.gap, config.max_prefix_length
            )
            emit(
                run_dir / "prefix_manifest.json",
                {
                    "train": prefix_manifest(train_plog),
                    "test": prefix_manifest(test_plog),
                },
            )

            train_buckets = bkt.assign_buckets(train_plog, config.bucketing)
            test_buckets = bkt.assign_buckets(test_plog, config.bucketing)
            manifest_rows = bkt.bucket_manifest(
                train_buckets, min_size=config.min_bucket_size
            )
            emit(run_dir / "buckets.json", {"train": manifest_rows})

        fingerprint_methods: dict[str, dict] = {}
        for row in manifest_rows:
            key_name = row["bucket"]
            key = next(k for k in train_buckets if k.name == key_name)
            if not row["trainable"]:
                bucket_status.append(
                    {"bucket": key_name, "status": "skipped", "reason": row["skip_reason"]}
                )
                continue
            with _Stage(f"bucket:{key_name}", status):
                test_members = test_buckets.get(key, [])
                vectors = _process_bucket(
                    run_dir / f"bucket_{key_name}",
                    train_buckets[key],
                    test_members,
                    log.schema,
                    config,
                    emit,
                )
                fingerprint_methods[key_name] = vectors
                bucket_status.append({"bucket": key_name, "status": "ok"})
        with _Stage("training", status):
            if not fingerprint_methods:
                raise TrainingError("no trainable bucket in this run")

        with _Stage("fingerprint", status):
            fingerprint = RunFingerprint(
                settings=config.settings_dict(),
                methods=fingerprint_methods,
                profiling_refs={
                    "raw_profile": "raw_profile.json",
                    "raw_pearson": "raw_pearson.json",
                    "raw_cramers": "raw_cramers.json",
                    "raw_mi": "raw_mi.json",
                },
            )
            fingerprint.save(run_dir / "fingerprint.json")
    except PipelineError:
        _write_manifest(run_dir, config, status, bucket_status, ok=False)
        raise

    status["stage"] = "done"
    manifest = _write_manifest(run_dir, config, status, bucket_status, ok=True)
    return RunArtifacts(directory=run_dir, run_id=config.run_id(), manifest=manifest)


def _write_manifest(run_dir: Path, config, status, bucket_status, ok: bool) -> dict:
    files = []
    for path in sorted(run_dir.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            files.append(
                {
                    "path": str(path.relative_to(run_dir)),
                    "sha256": _file_sha256(path),
                    "bytes": path.stat().st_size,
                }
            )
    manifest = {
        "run_id": config.run_id(),
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "status": "ok" if ok else "error",
        "stage": status.get("stage"),
        "error": status.get("error"),
        "unsafe_pairings": config.unsafe_pairings,
        "buckets": bucket_status,
        "files": files,
    }
    write_json(run_dir / "manifest.json", manifest)
    return manifest


def run_grid(grid: GridSpec, out_dir) -> dict:
    """Run every grid cell, isolating per-cell failures; returns the grid manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = []
    for config in grid.cells():
        record = {
            "run_id": config.run_id(),
            "encoding": config.encoding,
            "model": config.model.model,
            "seed": config.seed,
        }
        try:
            run_experiment(config, out)
            record["status"] = "ok"
        except PipelineError as exc:
            record["status"] = "error"
            record["error"] = str(exc)
            record["exit_code"] = exc.exit_code
        cells.append(record)
    manifest = {
        "base_config_hash": grid.base.config_hash(),
        "n_cells": len(cells),
        "n_failed": sum(1 for c in cells if c["status"] != "ok"),
        "cells": cells,
    }
    write_json(out / "grid_manifest.json", manifest)
    return manifest
