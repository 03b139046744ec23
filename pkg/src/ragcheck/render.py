"""Plain-text tables for metric reports and correlation results."""

from __future__ import annotations

from typing import Optional, Sequence

from .metrics import COLUMN_HEADERS, METRIC_NAMES, AggregateReport, MetricsRecord

MISSING = "—"


def pct(value: Optional[float], digits: int = 1) -> str:
    return MISSING if value is None else f"{value * 100:.{digits}f}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths)))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))))
    return "\n".join(lines) + "\n"


def metrics_row(label: str, values: dict[str, Optional[float]], claims: str) -> list[str]:
    return [label, *(pct(values[n]) for n in METRIC_NAMES), claims]


def render_report(records: Sequence[MetricsRecord], agg: AggregateReport) -> str:
    """Metrics as percentages with one decimal; the average row closes the table."""
    header = ["query_id", *(COLUMN_HEADERS[n] for n in METRIC_NAMES), "#Claim"]
    rows = [metrics_row(r.query_id, r.metrics(), str(r.n_response_claims)) for r in records]
    rows.append(metrics_row("average", agg.means, str(agg.display_claims)))
    return _table(header, rows)


def render_correlations(rows: Sequence[dict]) -> str:
    header = ["metric", "aspect", "Pearson", "Spearman", "n", "agreement"]
    body = [[r["metric"], r["aspect"], pct(r["pearson"], 2), pct(r["spearman"], 2), str(r["n"]),
             pct(r.get("agreement"), 2) if "agreement" in r else ""]
            for r in rows]
    if not any("agreement" in r for r in rows):
        header = header[:-1]
        body = [b[:-1] for b in body]
    return _table(header, body)
