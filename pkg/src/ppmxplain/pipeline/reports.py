"""Report rendering: top-k bar charts, SHAP summary scatters and a Markdown
summary for a completed run directory.

Figures are SVG rendered with a fixed hash salt and no embedded date so that
re-rendering the same run is byte-identical. Each figure gets a CSV twin with
exactly the plotted values.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..errors import DataError  # noqa: E402
from ..stability import RunFingerprint  # noqa: E402

plt.rcParams["svg.hashsalt"] = "ppmxplain"

_SVG_META = {"Date": None}


def _save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def _bar_chart(path_svg, path_csv, title: str, names: list[str], scores: list[float]):
    with open(path_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["column", "score"])
        for name, score in zip(names, scores):
            writer.writerow([name, repr(float(score))])
    fig, ax = plt.subplots(figsize=(7, 0.5 + 0.4 * len(names)))
    ypos = range(len(names))[::-1]
    ax.barh(list(ypos), scores, color="#4878a8")
    ax.set_yticks(list(ypos))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xlabel("score")
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    _save_svg(fig, path_svg)


def _beeswarm(path_svg, points_csv, title: str, top_columns: list[str]):
    """Summary scatter of per-point contributions: one row per top column,
    x = phi, color = feature value (normalized per column)."""
    per_column: dict[str, list[tuple[float, float]]] = {c: [] for c in top_columns}
    with open(points_csv, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            column = row["column"]
            if column in per_column:
                per_column[column].append(
                    (float(row["phi"]), float(row["feature_value"]))
                )
    fig, ax = plt.subplots(figsize=(7, 0.6 + 0.45 * len(top_columns)))
    for slot, column in enumerate(reversed(top_columns)):
        points = per_column[column]
        if not points:
            continue
        phis = [p[0] for p in points]
        values = [p[1] for p in points]
        lo, hi = min(values), max(values)
        colors = [0.5 if hi == lo else (v - lo) / (hi - lo) for v in values]
        jitter = [
            slot + 0.28 * (((i * 2654435761) % 1000) / 1000 - 0.5)
            for i in range(len(phis))
        ]
        ax.scatter(phis, jitter, c=colors, cmap="coolwarm", s=8, vmin=0.0, vmax=1.0)
    ax.set_yticks(range(len(top_columns)))
    ax.set_yticklabels(list(reversed(top_columns)), fontsize=8)
    ax.axvline(0.0, color="#888888", linewidth=0.8)
    ax.set_xlabel("contribution to margin")
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    _save_svg(fig, path_svg)


def emit_reports(run_dir, top_k: int = 5) -> list[Path]:
    """Render figures and the Markdown summary for a completed run.

    Emits, under ``<run_dir>/reports/``: one bar chart (SVG + CSV) per
    (bucket, method), a SHAP summary scatter per bucket when SHAP ran, and
    ``summary.md``.
    """
    run_dir = Path(run_dir)
    fingerprint_path = run_dir / "fingerprint.json"
    if not fingerprint_path.exists():
        raise DataError(f"{run_dir} has no fingerprint.json (incomplete run?)")
    fingerprint = RunFingerprint.load(fingerprint_path)
    reports_dir = run_dir / "reports"
    reports_dir.mkdir(exist_ok=True)

    written: list[Path] = []
    summary: list[str] = []
    with open(run_dir / "config.json", "r", encoding="utf-8") as fh:
        config = json.load(fh)
    summary.append(f"# Run {run_dir.name}")
    summary.append("")
    summary.append(f"- config hash: `{config['config_hash']}`")
    summary.append(f"- seed: {config['seed']}")
    summary.append(
        f"- encoding/bucketing: {config['encoding']} / {config['bucketing']}"
    )
    summary.append(f"- model: {config['model']['model']}")
    summary.append("")

    for bucket in sorted(fingerprint.methods):
        bucket_dir = run_dir / f"bucket_{bucket}"
        summary.append(f"## Bucket {bucket}")
        eval_path = bucket_dir / "eval.json"
        if eval_path.exists():
            with open(eval_path, "r", encoding="utf-8") as fh:
                evaluation = json.load(fh)
            for side in ("train", "test"):
                if side in evaluation:
                    auc = evaluation[side]["auc"]
                    auc_text = "n/a" if auc is None else f"{auc:.4f}"
                    summary.append(
                        f"- {side}: AUC {auc_text}, "
                        f"accuracy {evaluation[side]['accuracy']:.4f}"
                    )
        summary.append("")
        for method, vector in sorted(fingerprint.methods[bucket].items()):
            top = vector.top(top_k)
            scores = [vector.score(name) for name in top]
            stem = f"{bucket}_{method}"
            svg = reports_dir / f"top{top_k}_{stem}.svg"
            _bar_chart(
                svg,
                reports_dir / f"top{top_k}_{stem}.csv",
                f"{method} top {top_k} ({bucket})",
                top,
                scores,
            )
            written.append(svg)
            ranked = ", ".join(f"{n} ({s:.4g})" for n, s in zip(top, scores))
            summary.append(f"- **{method}**: {ranked}")
        points_csv = bucket_dir / "shap_train_points.csv"
        if points_csv.exists() and "shap-global" in fingerprint.methods[bucket]:
            top = fingerprint.methods[bucket]["shap-global"].top(top_k)
            svg = reports_dir / f"shap_summary_{bucket}.svg"
            _beeswarm(svg, points_csv, f"SHAP summary ({bucket})", top)
            written.append(svg)
        summary.append("")

    summary_path = reports_dir / "summary.md"
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(summary) + "\n")
    written.append(summary_path)
    return written
