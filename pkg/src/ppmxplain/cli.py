"""Command-line interface.

Subcommands: ingest, profile, run, grid, compare, report, synth.
Exit codes: 0 ok, 2 config error, 3 data error, 4 training error,
5 explanation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .encoding import FeatureMatrix
from .errors import ConfigError, DataError, PipelineError
from .log_model import (
    apply_labeling,
    compute_log_stats,
    derive_time_features,
    export_csv,
    ingest_csv,
)
from .pipeline import emit_reports, load_config_file, run_experiment, run_grid
from .pipeline.run import write_json
from .profiling import DataTable, mutual_info, pearson_matrix, profile
from .stability import RunFingerprint, compare_runs
from .synthetic import SYNTH_MAPPING, make_synthetic_log


def _cmd_ingest(args) -> int:
    config, _ = load_config_file(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log = ingest_csv(config.log_path, config.mapping)
    log = apply_labeling(log, config.label_rule)
    if config.derive_time:
        log = derive_time_features(log)
    stats = compute_log_stats(log)
    write_json(out / "log_stats.json", stats.to_dict())
    if args.export:
        from dataclasses import replace

        mapping = config.mapping
        if config.derive_time:
            from .log_model import NUMERIC, TIME_FEATURES

            dynamic = dict(mapping.dynamic)
            dynamic.update({name: NUMERIC for name in TIME_FEATURES})
            mapping = replace(mapping, dynamic=dynamic)
        if mapping.label is None:
            mapping = replace(mapping, label="outcome")
        export_csv(log, out / "log_export.csv", mapping)
    print(f"ingested {stats.n_traces} traces "
          f"(positive ratio {stats.positive_ratio:.4f}) -> {out}")
    return 0


def _cmd_profile(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    matrix = FeatureMatrix.from_csv(args.input)
    table = DataTable.from_matrix(matrix)
    write_json(out / "profile.json", profile(table).to_dict())
    corr = pearson_matrix(table)
    write_json(out / "pearson.json", corr.to_dict())
    corr.to_csv(out / "pearson.csv")
    write_json(out / "mi.json", mutual_info(table, k=args.k).to_dict())
    print(f"profiled {matrix.n_rows} rows x {matrix.n_columns} columns -> {out}")
    return 0


def _cmd_run(args) -> int:
    config, _ = load_config_file(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    artifacts = run_experiment(config, args.out)
    print(f"run {artifacts.run_id} complete -> {artifacts.directory}")
    return 0


def _cmd_grid(args) -> int:
    config, grid = load_config_file(args.config)
    if grid is None:
        raise ConfigError("config has no 'grid' section; use the run subcommand")
    manifest = run_grid(grid, args.out)
    failed = manifest["n_failed"]
    print(
        f"grid complete: {manifest['n_cells'] - failed}/{manifest['n_cells']} "
        f"cells ok -> {args.out}"
    )
    return 0


def _cmd_compare(args) -> int:
    dir_a, dir_b = (Path(d) for d in args.runs)
    fp_a = RunFingerprint.load(dir_a / "fingerprint.json")
    fp_b = RunFingerprint.load(dir_b / "fingerprint.json")
    report = compare_runs(fp_a, fp_b, k=args.k)
    payload = report.to_dict()
    payload["runs"] = [dir_a.name, dir_b.name]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "stability_report.json", payload)
        report.to_csv(out / "stability_report.csv")
        print(f"stability report -> {out}")
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def _cmd_report(args) -> int:
    written = emit_reports(args.run, top_k=args.k)
    print(f"wrote {len(written)} report files -> {Path(args.run) / 'reports'}")
    return 0


def _cmd_synth(args) -> int:
    log = make_synthetic_log(
        n_cases=args.cases,
        n_activities=args.activities,
        min_length=args.min_length,
        max_length=args.max_length,
        marker_activity="act_marker",
        marker_rate=0.5,
        whole_hours=args.whole_hours,
        seed=args.seed,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    from dataclasses import replace

    mapping = replace(SYNTH_MAPPING, label=None)
    export_csv(log, out, mapping)
    if args.config_out:
        config = {
            "log_path": str(out),
            "mapping": mapping.to_dict(),
            "label_rule": {"kind": "activity-occurs", "activity": "act_marker"},
            "model": {"model": "logreg"},
            "encoding": "aggregation",
            "seed": args.seed,
            "grid": {
                "encoding": ["aggregation", "index"],
                "model": ["logreg", "gbt"],
                "seeds": [args.seed, args.seed + 1],
            },
        }
        with open(args.config_out, "w", encoding="utf-8") as fh:
            json.dump(config, fh, indent=2, sort_keys=True)
    print(f"wrote {sum(t.length for t in log)} events, {len(log)} cases -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppmxplain",
        description="Outcome-prediction pipeline with explanation diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest a CSV log and write its statistics")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--export", action="store_true", help="also export the normalized log")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("profile", help="profile a serialized feature matrix")
    p.add_argument("--input", required=True, help="matrix CSV (with .columns.json sidecar)")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("run", help="execute one experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("grid", help="execute the config's experiment grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("compare", help="stability metrics between two run directories")
    p.add_argument("--runs", nargs=2, required=True, metavar=("DIR1", "DIR2"))
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("report", help="render figures and summary for a run")
    p.add_argument("--run", required=True)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic demo log")
    p.add_argument("--out", required=True)
    p.add_argument("--cases", type=int, default=300)
    p.add_argument("--activities", type=int, default=10)
    p.add_argument("--min-length", type=int, default=3)
    p.add_argument("--max-length", type=int, default=20)
    p.add_argument("--whole-hours", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config-out", default=None,
                   help="write a ready-to-run config pointing at the log")
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
