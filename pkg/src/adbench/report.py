"""Summaries of a results table: ``summary.csv`` and ``plotdata.json``.

``plotdata.json`` layout (validated against :data:`PLOTDATA_SCHEMA`)::

    {
      "schema_version": 1,
      "unsup": [{"method", "normal_class", "ratio", "mean_auc", "mean_std", "n_cells"}, ...],
      "sad":   [{"method", "normal_class", "ratio", "mean_auc", "mean_std", "n_cells"}, ...]
    }

``unsup`` holds one point per (method, normal class, pollution ratio); ``sad``
one bar per (normal class, labeled ratio). Either list may be empty.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .metrics import CellResult, GroupSummary, IncompleteGridError, aggregate

SUMMARY_HEADER = ["grid", "method", "normal_class", "ratio", "mean_auc", "mean_std", "n_cells"]

_ROW_SCHEMA = {
    "type": "object",
    "required": ["method", "normal_class", "ratio", "mean_auc", "mean_std", "n_cells"],
    "additionalProperties": False,
    "properties": {
        "method": {"type": "string"},
        "normal_class": {"type": "integer", "minimum": 0},
        "ratio": {"type": "number", "minimum": 0, "maximum": 1},
        "mean_auc": {"type": "number", "minimum": 0, "maximum": 1},
        "mean_std": {"type": "number", "minimum": 0},
        "n_cells": {"type": "integer", "minimum": 1},
    },
}

PLOTDATA_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "adbench plot data",
    "type": "object",
    "required": ["schema_version", "unsup", "sad"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": 1},
        "unsup": {"type": "array", "items": _ROW_SCHEMA},
        "sad": {"type": "array", "items": _ROW_SCHEMA},
    },
}


def grid_of(result: CellResult) -> str:
    if result.contam_kind == "labeled" or result.method.startswith("dsad"):
        return "sad"
    return "unsup"


def summarize(results: list[CellResult]) -> dict[str, list[GroupSummary]]:
    """Aggregate each grid separately; raises IncompleteGridError on gaps."""
    out = {"unsup": [], "sad": []}
    for grid in out:
        rows = [r for r in results if grid_of(r) == grid]
        if not rows:
            continue
        classes = sorted({r.normal_class for r in rows} | {r.contam_class for r in rows if r.contam_class is not None})
        seeds = sorted({r.seed for r in rows})
        present = {(r.method, r.normal_class, r.ratio) for r in rows}
        absent = [(m, n, None, q, None)
                  for m in sorted({k[0] for k in present})
                  for n in sorted({k[1] for k in present})
                  for q in sorted({k[2] for k in present})
                  if (m, n, q) not in present]
        if absent:
            raise IncompleteGridError(absent)
        out[grid] = aggregate(rows, classes=classes, seeds=seeds)
    return out


def _row(g: GroupSummary) -> dict:
    return {"method": g.method, "normal_class": g.normal_class, "ratio": g.ratio,
            "mean_auc": g.mean_auc, "mean_std": g.mean_std, "n_cells": g.n_cells}


def plotdata(summary: dict[str, list[GroupSummary]]) -> dict:
    return {"schema_version": 1, **{grid: [_row(g) for g in groups] for grid, groups in summary.items()}}


def format_summary(summary: dict[str, list[GroupSummary]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for grid in ("unsup", "sad"):
        for g in summary.get(grid, []):
            w.writerow([grid, g.method, g.normal_class, repr(g.ratio), repr(g.mean_auc), repr(g.mean_std), g.n_cells])
    return buf.getvalue()


def write_report(results: list[CellResult], out_dir, figures: bool = True) -> dict[str, str]:
    """Write ``summary.csv``, ``plotdata.json`` and (optionally) PNG figures; return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = summarize(results)
    paths = {"summary": str(out / "summary.csv"), "plotdata": str(out / "plotdata.json")}
    (out / "summary.csv").write_text(format_summary(summary), encoding="utf-8")
    (out / "plotdata.json").write_text(json.dumps(plotdata(summary), indent=2), encoding="utf-8")
    if figures:
        from .plotting import plot_sad, plot_unsup

        if summary["unsup"]:
            paths["figure_unsup"] = str(plot_unsup(summary["unsup"], out / "fig_unsup.png"))
        if summary["sad"]:
            paths["figure_sad"] = str(plot_sad(summary["sad"], out / "fig_sad.png"))
    return paths
