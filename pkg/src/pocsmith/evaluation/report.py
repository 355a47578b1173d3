"""Aggregation of run artifacts into result tables.

Outputs are emitted both machine-readable (CSV/JSON) and as rendered text
tables. Cells that are structurally inapplicable (resource limits for
prompting; compile/assertion failures for the workflow, whose fixed loop
retries until a budget trips) are rendered distinctly rather than as
zeros, and grid gaps are reported, never silently zero-filled.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from pocsmith.jsonutil import loads

RQ1_VERDICTS = ("CF", "NA", "IA", "MC", "MT", "WellFormed")
RQ2_VERDICTS = ("Correct", "Incorrect", "Inconclusive")
INAPPLICABLE = {
    ("prompting", "MC"),
    ("prompting", "MT"),
    ("workflow", "CF"),
    ("workflow", "IA"),
}
CSV_COLUMNS = (
    "finding_id",
    "strategy",
    "model",
    "rq1_verdict",
    "rq2_verdict",
    "cost_usd",
    "sc_tool_calls",
    "duration_ms",
)


@dataclass(frozen=True)
class ReportRow:
    finding_id: str
    strategy: str
    model: str
    rq1_verdict: str
    rq2_verdict: str | None = None
    cost_usd: str = "0"
    sc_tool_calls: int = 0
    duration_ms: int = 0
    annotation_level: str | None = None


def collect_rows(run_dirs: Iterable[Path]) -> list[ReportRow]:
    """Read completed units from any number of run directories."""
    rows = []
    for run_dir in run_dirs:
        run_dir = Path(run_dir)
        for meta_path in sorted(run_dir.glob("*/*/meta.json")):
            unit_dir = meta_path.parent
            meta = loads(meta_path.read_text())
            rq1_path = unit_dir / "rq1.json"
            summary_path = unit_dir / "run.json"
            if not rq1_path.is_file() or not summary_path.is_file():
                continue
            rq1 = loads(rq1_path.read_text())
            summary = loads(summary_path.read_text())
            rq2 = None
            rq2_path = unit_dir / "rq2.json"
            if rq2_path.is_file():
                rq2 = loads(rq2_path.read_text())["verdict"]
            rows.append(
                ReportRow(
                    finding_id=meta["finding_id"],
                    strategy=meta["strategy"],
                    model=meta["model_id"],
                    rq1_verdict=rq1["verdict"],
                    rq2_verdict=rq2,
                    cost_usd=summary["usage"]["cumulative_cost_usd"],
                    sc_tool_calls=summary["sc_tool_call_count"],
                    duration_ms=summary["usage"]["wall_time_ms"],
                    annotation_level=meta.get("annotation_level"),
                )
            )
    return rows


def find_grid_gaps(
    rows: Sequence[ReportRow],
    finding_ids: Sequence[str],
    strategies: Sequence[str],
    models: Sequence[str],
) -> list[tuple[str, str, str]]:
    present = {(r.finding_id, r.strategy, r.model) for r in rows}
    return sorted(
        (finding_id, strategy, model)
        for finding_id in finding_ids
        for strategy in strategies
        for model in models
        if (finding_id, strategy, model) not in present
    )


def aggregate_rq1(rows: Sequence[ReportRow]) -> dict[tuple[str, str], Counter]:
    counts: dict[tuple[str, str], Counter] = {}
    for row in rows:
        counts.setdefault((row.strategy, row.model), Counter())[row.rq1_verdict] += 1
    return counts


def aggregate_rq2(rows: Sequence[ReportRow]) -> dict[tuple[str, str], Counter]:
    counts: dict[tuple[str, str], Counter] = {}
    for row in rows:
        bucket = counts.setdefault((row.strategy, row.model), Counter())
        if row.rq1_verdict == "WellFormed":
            bucket["Evaluated"] += 1
            if row.rq2_verdict:
                bucket[row.rq2_verdict] += 1
    return counts


def aggregate_levels(rows: Sequence[ReportRow]) -> dict[str, Counter]:
    """Per-annotation-level outcome counts (RQ3 shape)."""
    counts: dict[str, Counter] = {}
    for row in rows:
        if row.annotation_level is None:
            continue
        bucket = counts.setdefault(row.annotation_level, Counter())
        if row.rq1_verdict != "WellFormed":
            bucket["IllFormed"] += 1
        elif row.rq2_verdict:
            bucket[row.rq2_verdict] += 1
    return counts


def write_csv(rows: Sequence[ReportRow], path: Path | None = None) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in sorted(rows, key=lambda r: (r.finding_id, r.strategy, r.model)):
        writer.writerow(
            [
                row.finding_id,
                row.strategy,
                row.model,
                row.rq1_verdict,
                row.rq2_verdict or "",
                row.cost_usd,
                row.sc_tool_calls,
                row.duration_ms,
            ]
        )
    text = buffer.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def _column_keys(rows: Sequence[ReportRow]) -> list[tuple[str, str]]:
    strategy_order = {"prompting": 0, "workflow": 1, "agent": 2}
    keys = sorted(
        {(r.strategy, r.model) for r in rows},
        key=lambda key: (strategy_order.get(key[0], 9), key[1]),
    )
    return keys


def render_rq1_table(rows: Sequence[ReportRow]) -> str:
    """Verdict counts per strategy and model, Table-2 shaped."""
    counts = aggregate_rq1(rows)
    keys = _column_keys(rows)
    header = ["verdict"] + [f"{s}/{m}" for s, m in keys]
    lines = [" | ".join(header)]
    lines.append(" | ".join(["---"] * len(header)))
    display = {"WellFormed": "Total Well-formed"}
    for verdict in RQ1_VERDICTS:
        row = [display.get(verdict, f"Total {verdict}")]
        for strategy, model in keys:
            if (strategy, verdict) in INAPPLICABLE:
                row.append("n/a")
            else:
                row.append(str(counts.get((strategy, model), Counter()).get(verdict, 0)))
        lines.append(" | ".join(row))
    return "\n".join(lines)


def render_rq2_table(rows: Sequence[ReportRow]) -> str:
    counts = aggregate_rq2(rows)
    keys = _column_keys(rows)
    header = ["outcome"] + [f"{s}/{m}" for s, m in keys]
    lines = [" | ".join(header)]
    lines.append(" | ".join(["---"] * len(header)))
    for label in ("Evaluated", "Incorrect", "Inconclusive", "Correct"):
        row = [f"Total {label}"]
        for key in keys:
            row.append(str(counts.get(key, Counter()).get(label, 0)))
        lines.append(" | ".join(row))
    return "\n".join(lines)


def render_rq3_table(rows: Sequence[ReportRow]) -> str:
    counts = aggregate_levels(rows)
    levels = [lvl for lvl in ("high_level", "detailed", "procedural") if lvl in counts]
    header = ["outcome"] + levels
    lines = [" | ".join(header)]
    lines.append(" | ".join(["---"] * len(header)))
    for label in ("IllFormed", "Incorrect", "Inconclusive", "Correct"):
        display = "Total Ill-formed" if label == "IllFormed" else f"Total {label}"
        lines.append(" | ".join([display] + [str(counts[lvl].get(label, 0)) for lvl in levels]))
    return "\n".join(lines)
