"""Criteria tables in the column layout of the headline results table."""

from __future__ import annotations

import csv
import io
from typing import Sequence

from .evaluator import CRITERIA

_SHORT = ("Delivery", "CS Micro", "CS Macro", "Hard Micro", "Hard Macro", "Final")


def _fmt(v: float) -> str:
    return f"{v:.1f}"


def criteria_csv(rows: Sequence[tuple[str, dict]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", *CRITERIA])
    for name, crit in rows:
        w.writerow([name, *(f"{crit[c]:.4f}" for c in CRITERIA)])
    return buf.getvalue()


def criteria_table(rows: Sequence[tuple[str, dict]]) -> str:
    header = ["name", *_SHORT]
    body = [[name, *(_fmt(crit[c]) for c in CRITERIA)] for name, crit in rows]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = []
    for r in [header, *body]:
        cells = [r[0].ljust(widths[0]), *(c.rjust(w) for c, w in zip(r[1:], widths[1:]))]
        lines.append("  ".join(cells).rstrip())
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
