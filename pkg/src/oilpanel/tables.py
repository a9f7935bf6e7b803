"""Table documents: long-format CSV plus aligned plain text.

Numbers are fixed at 3 decimals with significance stars in their own
column.  Cells that cannot be estimated carry ``status`` text instead of
numbers so a blank is never mistaken for a zero.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .did import DidCell
from .event_study import EventStudyResult
from .panel import SummaryTable
from .unit_root import LlcResult

OK = "ok"


def fmt(x, digits: int = 3) -> str:
    if x is None:
        return ""
    x = float(x)
    if not math.isfinite(x):
        return ""
    s = f"{x:.{digits}f}"
    return "0.000" if s == "-0.000" else s


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple[str, ...]] = field(default_factory=list)
    title: str = ""
    notes: list[str] = field(default_factory=list)

    def add(self, *cells) -> None:
        if len(cells) != len(self.columns):
            raise ValueError(f"row has {len(cells)} cells, table has {len(self.columns)} columns")
        self.rows.append(tuple("" if c is None else str(c) for c in cells))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self.rows)
        return buf.getvalue()

    def to_text(self) -> str:
        grid = [self.columns, *self.rows]
        widths = [max(len(r[j]) for r in grid) for j in range(len(self.columns))]
        lines = [self.title] if self.title else []
        for i, r in enumerate(grid):
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        lines.extend(self.notes)
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path, text: bool = True, layout: "Table | None" = None) -> list[Path]:
        """CSV at ``path``; the ``.txt`` sibling renders ``layout`` if given."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(), encoding="utf-8", newline="")
        out = [path]
        if text:
            tpath = path.with_suffix(".txt")
            tpath.write_text((layout or self).to_text(), encoding="utf-8", newline="")
            out.append(tpath)
        return out


def summary_table(tables: Iterable[SummaryTable], title: str = "") -> Table:
    t = Table(("study", "group", "variable", "mean", "sd", "n", "status"), title=title)
    for st in tables:
        for (group, var), e in st.entries.items():
            status = OK if e.available else "unavailable"
            t.add(st.study_id, group, var, fmt(e.mean), fmt(e.sd), e.n, status)
    return t


def did_long_table(cells: Iterable[DidCell], title: str = "") -> Table:
    t = Table(
        ("study", "variant", "outcome", "estimate", "se", "stars", "r2", "n", "status"), title=title
    )
    for c in cells:
        r = c.result
        if r is None:
            t.add(c.study_id, c.variant, c.outcome, "", "", "", "", "", f"unavailable: {c.reason}")
        else:
            t.add(c.study_id, c.variant, c.outcome, fmt(r.delta), fmt(r.se), r.stars,
                  fmt(r.r2), r.n, OK)
    return t


def cell(estimate, se, star: str) -> str:
    """Paper-style cell, e.g. ``3.375*** (0.799)``."""
    if estimate is None:
        return ""
    return f"{fmt(estimate)}{star} ({fmt(se)})"


def did_wide_table(cells: Iterable[DidCell], outcomes: Sequence[str], title: str = "") -> Table:
    """One row per study and variant; one estimate and R2 column per outcome."""
    cols = ["study"]
    for o in outcomes:
        cols += [o, "R2"]
    cols.append("N")
    t = Table(tuple(cols), title=title)
    grid: dict[tuple[str, str], dict[str, DidCell]] = {}
    for c in cells:
        grid.setdefault((c.study_id, c.variant), {})[c.outcome] = c
    for (study, variant), row in grid.items():
        label = study if variant == "main" else f"  {variant}"
        vals, n = [label], ""
        for o in outcomes:
            c = row.get(o)
            r = c.result if c else None
            if r is None:
                vals += ["n/a", ""]
            else:
                vals += [cell(r.delta, r.se, r.stars), fmt(r.r2)]
                n = n or str(r.n)
        vals.append(n)
        t.add(*vals)
    t.notes.append("* p<0.10, ** p<0.05, *** p<0.01; N is for the first available outcome")
    return t


def event_wide_table(
    results: Sequence[tuple[str, EventStudyResult | None, str]], title: str = ""
) -> Table:
    """Bins as rows, studies as columns, with R2 and N footers."""
    studies = [sid for sid, _, _ in results]
    labels = sorted({b.label for _, r, _ in results if r is not None for b in r.bins}, key=_bin_key)
    t = Table(("bin", *studies), title=title)
    for lab in labels:
        row = [lab]
        for _, r, _ in results:
            b = r.get(lab) if r is not None else None
            row.append(cell(b.estimate, b.se, b.stars) if b else "")
        t.add(*row)
    t.add("R2", *(fmt(r.r2) if r else "n/a" for _, r, _ in results))
    t.add("N", *(str(r.n) if r else "n/a" for _, r, _ in results))
    for sid, r, why in results:
        if r is None:
            t.notes.append(f"{sid}: unavailable: {why}")
    return t


def _bin_key(label: str) -> int:
    return int(label.split("..")[0])


def event_long_table(
    results: Sequence[tuple[str, EventStudyResult | None, str]], title: str = ""
) -> Table:
    """``results`` holds (study id, result or None, failure reason)."""
    t = Table(("study", "bin", "estimate", "se", "stars", "status"), title=title)
    for study_id, res, reason in results:
        if res is None:
            t.add(study_id, "", "", "", "", f"unavailable: {reason}")
            continue
        for b in res.bins:
            t.add(study_id, b.label, fmt(b.estimate), fmt(b.se), b.stars, OK)
        t.add(study_id, "R2", fmt(res.r2), "", "", OK)
        t.add(study_id, "N", res.n, "", "", OK)
    return t


def llc_table(results: Sequence[tuple[str, str, LlcResult | None, str]], title: str = "") -> Table:
    """``results`` holds (study id, outcome, result or None, failure reason)."""
    t = Table(("study", "outcome", "t_star", "p_value", "stars", "panels_used"), title=title)
    for study_id, outcome, res, reason in results:
        if res is None:
            t.add(study_id, outcome, "", "", "", 0)
            t.notes.append(f"{study_id}/{outcome}: unavailable: {reason}")
        else:
            t.add(study_id, outcome, fmt(res.adjusted_t_star), fmt(res.p_value, 4), res.stars,
                  len(res.panels_used))
    return t
