"""Evaluation reports: console table, TSV, JSON, and rendered figures.

One evaluation produces a small bundle in an output directory:

* ``metrics.tsv``      — name/value summary, tab-delimited;
* ``per_query.tsv``    — per-query counts and scores;
* ``report.json``      — machine report, including the effective
  configuration the run was invoked with;
* ``metrics.png``      — summary bar chart;
* ``per_query.png``    — per-query F1 histogram.

Nothing here embeds timestamps, so identical inputs give identical
bundles.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .metrics import MetricsReport, RunResult, average_precision, f_beta


def per_query_rows(run: RunResult, k: int | None = None) -> list[dict]:
    rows = []
    for qid in run.query_ids():
        retrieved, gold = run.pair(qid)
        correct = len(gold.intersection(retrieved))
        precision = correct / len(retrieved) if retrieved else 0.0
        recall = correct / len(gold) if gold else 0.0
        row = {
            "query": qid,
            "retrieved": len(retrieved),
            "gold": len(gold),
            "correct": correct,
            "precision": precision,
            "recall": recall,
            "f1": f_beta(precision, recall, 1.0),
        }
        if k is not None:
            row["ap"] = average_precision(retrieved, gold, k) if gold else None
        rows.append(row)
    return rows


def _summary_pairs(report: MetricsReport) -> list[tuple[str, object]]:
    pairs = [
        ("precision", report.precision),
        ("recall", report.recall),
        (f"f{report.beta:g}", report.f_beta),
        ("retrieved_total", report.retrieved_total),
        ("relevant_total", report.relevant_total),
        ("correct_total", report.correct_total),
    ]
    if report.map_at_k is not None:
        pairs.insert(3, (f"map@{report.k}", report.map_at_k))
    return pairs


def format_table(report: MetricsReport) -> str:
    """Human-readable summary for the console."""
    lines = []
    for name, value in _summary_pairs(report):
        shown = f"{value:.4f}" if isinstance(value, float) else str(value)
        lines.append(f"{name:<16}{shown}")
    if report.zero_divisions:
        lines.append(f"{'undefined':<16}{','.join(report.zero_divisions)} (reported as 0)")
    return "\n".join(lines)


def write_tsv_summary(report: MetricsReport, path) -> None:
    lines = [f"{name}\t{value!r}" if isinstance(value, float) else f"{name}\t{value}"
             for name, value in _summary_pairs(report)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_per_query_tsv(rows: list[dict], path) -> None:
    if not rows:
        Path(path).write_text("", encoding="utf-8")
        return
    cols = list(rows[0])
    out = ["\t".join(cols)]
    for row in rows:
        out.append("\t".join("" if row[c] is None else str(row[c]) for c in cols))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def write_json_report(report: MetricsReport, rows: list[dict], config: dict, path) -> None:
    payload = {
        "metrics": {
            "precision": report.precision,
            "recall": report.recall,
            "f_beta": report.f_beta,
            "beta": report.beta,
            "map_at_k": report.map_at_k,
            "k": report.k,
            "retrieved_total": report.retrieved_total,
            "relevant_total": report.relevant_total,
            "correct_total": report.correct_total,
            "zero_divisions": list(report.zero_divisions),
        },
        "per_query": rows,
        "config": config,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


_PNG_METADATA = {"Software": "lexcase"}


def render_figures(report: MetricsReport, rows: list[dict], out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    paths = []

    names, values = [], []
    for name, value in _summary_pairs(report):
        if isinstance(value, float):
            names.append(name)
            values.append(value)
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(names, values, color="#4878a8")
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("score")
    ax.set_title("evaluation summary")
    for i, v in enumerate(values):
        ax.text(i, v + 0.02, f"{v:.3f}", ha="center", fontsize=8)
    fig.tight_layout()
    path = out_dir / "metrics.png"
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(5, 3))
    ax.hist([row["f1"] for row in rows], bins=10, range=(0.0, 1.0), color="#4878a8")
    ax.set_xlabel("per-query F1")
    ax.set_ylabel("queries")
    ax.set_title("per-query F1 distribution")
    fig.tight_layout()
    path = out_dir / "per_query.png"
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)
    paths.append(path)
    return paths


def write_bundle(out_dir, report: MetricsReport, rows: list[dict], config: dict) -> list[Path]:
    """Write the full report bundle; returns every file written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_tsv_summary(report, out_dir / "metrics.tsv")
    write_per_query_tsv(rows, out_dir / "per_query.tsv")
    write_json_report(report, rows, config, out_dir / "report.json")
    figures = render_figures(report, rows, out_dir)
    return [
        out_dir / "metrics.tsv",
        out_dir / "per_query.tsv",
        out_dir / "report.json",
        *figures,
    ]
