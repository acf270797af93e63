"""Per-interval contamination trend reports from scored evaluation records.

Records are grouped into their time-interval buckets; each bucket reports
sample count and mean metrics (EM/F1 for generation, Acc/macro-F1 for
multi-choice) plus option-kind selection proportions. Empty intervals keep
their row with absent means: missing is not zero. The configured model cutoff
interval, when inside the period, is marked.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .dates import FuzzyDate
from .diff import TimeInterval
from .evaluate import FORMAT_GENERATION, FORMAT_MULTI_CHOICE, EvalRecord
from .metrics import score_multichoice

logger = logging.getLogger(__name__)

PROPORTION_KINDS = ("correct", "outdated", "noise", "unknown", "unparsed")


@dataclass(frozen=True)
class IntervalRow:
    interval: TimeInterval
    count: int
    metrics: dict[str, float | None] = field(default_factory=dict)
    proportions: dict[str, float] = field(default_factory=dict)
    is_cutoff: bool = False


@dataclass(frozen=True)
class TrendReport:
    rows: tuple[IntervalRow, ...]
    format: str
    cutoff: FuzzyDate | None = None

    @property
    def total(self) -> int:
        return sum(row.count for row in self.rows)


def _mean(values: Sequence[float]) -> float | None:
    return sum(values) / len(values) if values else None


def contamination_report(
    records: Sequence[EvalRecord],
    intervals: Sequence[TimeInterval],
    cutoff: FuzzyDate | None = None,
) -> TrendReport:
    """Bucket scored records by interval and aggregate means and proportions."""
    if not records:
        raise ValueError("no evaluation records to report on")
    formats = {r.format for r in records}
    if len(formats) != 1:
        raise ValueError(f"mixed record formats: {sorted(formats)}")
    fmt = formats.pop()
    by_interval: dict[TimeInterval, list[EvalRecord]] = {iv: [] for iv in intervals}
    stray = 0
    for record in records:
        if record.interval is None or record.interval not in by_interval:
            stray += 1
            continue
        by_interval[record.interval].append(record)
    if stray:
        logger.warning("%d records fall outside the reported intervals", stray)

    cutoff_hit = False
    rows = []
    for interval in intervals:
        bucket = by_interval[interval]
        is_cutoff = cutoff is not None and interval.contains(cutoff)
        cutoff_hit = cutoff_hit or is_cutoff
        if fmt == FORMAT_GENERATION:
            metrics = {
                "em": _mean([r.em for r in bucket]),
                "f1": _mean([r.f1 for r in bucket]),
            }
            proportions = {}
        else:
            scores = score_multichoice(
                [(r.prediction, r.correct_label) for r in bucket],
                option_kinds_by_label=None,
                sample_ids=None,
            )
            metrics = {
                "acc": _mean([r.acc for r in bucket]),
                "f1": scores.macro_f1 if bucket else None,
            }
            total = len(bucket)
            proportions = {
                kind: (sum(1 for r in bucket if r.option_kind == kind) / total if total else 0.0)
                for kind in PROPORTION_KINDS
            }
        rows.append(
            IntervalRow(
                interval=interval,
                count=len(bucket),
                metrics=metrics,
                proportions=proportions,
                is_cutoff=is_cutoff,
            )
        )
    if cutoff is not None and not cutoff_hit:
        logger.warning("cutoff %s lies outside the reported period", cutoff.isoformat())
    return TrendReport(rows=tuple(rows), format=fmt, cutoff=cutoff)


def write_trend_csv(report: TrendReport, path: Path | str) -> None:
    """Plot-ready columnar file: one row per (interval, metric)."""
    lines = ["interval_begin,interval_end,count,is_cutoff,metric,value"]
    for row in report.rows:
        prefix = (
            f"{row.interval.begin.isoformat()},{row.interval.end.isoformat()},"
            f"{row.count},{int(row.is_cutoff)}"
        )
        for metric, value in row.metrics.items():
            rendered = "" if value is None else f"{value:.6f}"
            lines.append(f"{prefix},{metric},{rendered}")
        for kind in PROPORTION_KINDS:
            if kind in row.proportions:
                lines.append(f"{prefix},prop_{kind},{row.proportions[kind]:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def format_trend_table(report: TrendReport) -> str:
    """Human-readable per-interval table."""
    metric_names = list(report.rows[0].metrics) if report.rows else []
    prop_names = [f"%{k}" for k in PROPORTION_KINDS] if report.format == FORMAT_MULTI_CHOICE else []
    header = ["interval", "n", *metric_names, *prop_names, "cutoff"]
    table = [header]
    for row in report.rows:
        cells = [row.interval.label(), str(row.count)]
        for metric in metric_names:
            value = row.metrics.get(metric)
            cells.append("-" if value is None else f"{value:.3f}")
        for kind in PROPORTION_KINDS:
            if report.format == FORMAT_MULTI_CHOICE:
                cells.append(f"{row.proportions.get(kind, 0.0):.3f}")
        cells.append("<--" if row.is_cutoff else "")
        table.append(cells)
    widths = [max(len(line[i]) for line in table) for i in range(len(header))]
    rendered = []
    for line in table:
        rendered.append("  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip())
    return "\n".join(rendered)
