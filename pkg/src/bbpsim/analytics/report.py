"""report.csv and the human-readable summary table."""

from __future__ import annotations

import csv
import dataclasses
import math
from collections.abc import Sequence
from pathlib import Path

from .reduce import MetricsReport

REPORT_COLUMNS = tuple(f.name for f in dataclasses.fields(MetricsReport))
_INTS = {"n_t", "seed", "stale_tx", "blocks"}


def _cell(name: str, v) -> str:
    if name in _INTS or isinstance(v, str):
        return str(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.6f}"


def report_rows(reports: Sequence[MetricsReport]) -> list[list[str]]:
    return [[_cell(c, getattr(r, c)) for c in REPORT_COLUMNS] for r in reports]


def write_report(reports: Sequence[MetricsReport], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        w.writerows(report_rows(reports))


def summary_table(reports: Sequence[MetricsReport]) -> str:
    cols = [("protocol", "proto", "{}"), ("n_t", "n_t", "{}"), ("seed", "seed", "{}"),
            ("p90_ms", "p90 ms", "{:.1f}"), ("p90_model_ms", "model ms", "{:.1f}"),
            ("bytes_per_block", "MB/block", None), ("sync_fail_frac", "unsync", "{:.3f}"),
            ("gamma", "gamma", "{:.3f}"), ("beta", "beta", "{:.3f}"),
            ("stale_block_rate", "stale blk", "{:.3f}"), ("stale_tx", "stale tx", "{}"),
            ("status", "status", "{}")]
    rows = []
    for r in reports:
        row = []
        for attr, _, f in cols:
            v = getattr(r, attr)
            if attr == "bytes_per_block":
                row.append(f"{v / 1e6:.3f}")
            elif isinstance(v, float) and math.isnan(v):
                row.append("-")
            else:
                row.append(f.format(v))
        rows.append(row)
    heads = [c[1] for c in cols]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(heads)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(heads, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines)
