"""Regression tables and report serialization.

Two renderings of the same numbers are produced: a JSON document (sorted
keys, no timestamps) and a fixed-width text table. Numeric table cells are
rounded to six decimals before either rendering so that parsing the text
table gives exactly the values stored in the JSON.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .dataset import DesignMatrix
from .inference import CAlphaResult, DebiasedEstimates, SelectiveEstimates, significance_marks
from .solver import LassoFit

__all__ = [
    "DASH",
    "SIGNIFICANCE_LEGEND",
    "ReportTable",
    "regression_table",
    "fmt",
    "to_jsonable",
    "write_report",
    "parse_text_table",
]

DASH = "-"
SIGNIFICANCE_LEGEND = "*** p < 0.001, ** p < 0.01, * p < 0.05, · p < 0.1"
MARKS = "*·"


def fmt(x: float) -> float:
    """Round to the six decimals shown in tables (``-0.0`` becomes ``0.0``)."""
    v = float(f"{float(x):.6f}")
    return 0.0 if v == 0 else v


@dataclass
class ReportTable:
    """Rows of a regression table; ``"-"`` marks unselected or baseline cells.

    Each row is a mapping from column name to a float, a string or ``"-"``.
    ``marks`` optionally maps a column to the p-value column whose stars are
    appended to it in the text rendering.
    """

    columns: list[str]
    rows: list[dict[str, Any]]
    footnotes: dict[str, Any] = field(default_factory=dict)
    marks: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "rows": [dict(r) for r in self.rows],
                "footnotes": dict(self.footnotes)}

    def render(self) -> str:
        cells = [list(self.columns)]
        for r in self.rows:
            line = []
            for c in self.columns:
                v = r.get(c, DASH)
                if isinstance(v, float):
                    s = f"{v:.6f}"
                    pcol = self.marks.get(c)
                    if pcol is not None and isinstance(r.get(pcol), float):
                        s += significance_marks(min(max(r[pcol], 0.0), 1.0))
                else:
                    s = str(v) if v != "" else "."
                line.append(s)
            cells.append(line)
        widths = [max(len(row[k]) for row in cells) for k in range(len(self.columns))]
        out = ["  ".join(s.ljust(wd) for s, wd in zip(row, widths)).rstrip() for row in cells]
        for k, v in self.footnotes.items():
            out.append(f"# {k}: {v}")
        return "\n".join(out) + "\n"


def _cell(x):
    return DASH if x is None or (isinstance(x, float) and math.isnan(x)) else fmt(x)


def regression_table(d: DesignMatrix, fit: LassoFit, *, debiased: DebiasedEstimates | None = None,
                     c_alpha: Mapping[int, CAlphaResult] | None = None,
                     selective: SelectiveEstimates | None = None) -> ReportTable:
    """Table of Lasso, one-step and test results, one row per category.

    Baseline categories get a row of dashes; the Lasso column shows a dash
    for unselected columns, as do the selective-inference columns.
    """
    cols = ["variable", "category", "lasso"]
    marks = {}
    if debiased is not None:
        cols += ["db_theta", "db_p", "db_ame", "db_ame_p"]
        marks.update(db_theta="db_p", db_ame="db_ame_p")
    if c_alpha is not None:
        cols += ["c_alpha", "c_alpha_p"]
        marks.update(c_alpha="c_alpha_p")
    if selective is not None:
        cols += ["si_theta", "si_p", "si_method"]
        marks.update(si_theta="si_p")
    active = set(int(j) for j in fit.active_set)
    ame_pos = {j: k for k, j in enumerate(debiased.ame_columns)} if debiased is not None else {}
    si_pos = {j: k for k, j in enumerate(selective.indices)} if selective is not None else {}

    def row_for(j, variable, category):
        r: dict[str, Any] = {"variable": variable, "category": category}
        r["lasso"] = fmt(fit.theta[j]) if (j == 0 or j in active) else DASH
        if debiased is not None:
            r["db_theta"] = _cell(debiased.theta_tilde[j])
            r["db_p"] = _cell(debiased.p_values[j])
            k = ame_pos.get(j)
            r["db_ame"] = DASH if k is None else _cell(debiased.ame_tilde[k])
            r["db_ame_p"] = DASH if k is None else _cell(debiased.ame_p[k])
        if c_alpha is not None:
            res = c_alpha.get(j)
            r["c_alpha"] = DASH if res is None else _cell(res.statistic)
            r["c_alpha_p"] = DASH if res is None else _cell(res.p_value)
        if selective is not None:
            k = si_pos.get(j)
            r["si_theta"] = DASH if k is None else _cell(selective.theta_tilde_M[k])
            r["si_p"] = DASH if k is None else _cell(selective.p_values[k])
            r["si_method"] = DASH if k is None else selective.methods[k]
        return r

    def baseline_row(variable, category):
        r = {c: DASH for c in cols}
        r.update(variable=variable, category=f"{category} (omitted)")
        return r

    rows = [row_for(0, "(Intercept)", "")]
    for v in d.covariates:
        base = d.baselines.get(v)
        if base is not None:
            rows.append(baseline_row(v, base))
        for j in d.main_effect_columns(v):
            rows.append(row_for(j, v, d.columns[j].categories[0]))
    for j, c in enumerate(d.columns):
        if c.is_interaction:
            rows.append(row_for(j, " x ".join(c.variables), " x ".join(c.categories)))
    if not d.covariates:  # raw-array designs
        rows += [row_for(j, d.names[j], "") for j in range(1, d.X.shape[1])]
    foot = {"n": d.n, "lambda": fmt(fit.lam), "significance": SIGNIFICANCE_LEGEND,
            "omitted": {v: d.baselines[v] for v in d.covariates if v in d.baselines}}
    if selective is not None:
        foot["selective_note"] = selective.note
    return ReportTable(columns=cols, rows=rows, footnotes=foot, marks=marks)


def to_jsonable(x):
    """Convert numpy containers and dataclass-like values into JSON types."""
    if isinstance(x, Mapping):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [to_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_report(out_dir: str | Path, structured: Mapping[str, Any], text: str) -> tuple[Path, Path]:
    """Write ``report.json`` and ``report.txt`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pj, pt = out / "report.json", out / "report.txt"
    pj.write_text(json.dumps(to_jsonable(structured), sort_keys=True, indent=2,
                             ensure_ascii=False) + "\n", encoding="utf-8")
    pt.write_text(text, encoding="utf-8")
    return pj, pt


def parse_text_table(text: str, columns: Sequence[str]) -> list[dict[str, Any]]:
    """Read back a table rendered by :meth:`ReportTable.render`.

    Cells are split on runs of two or more spaces; numeric cells lose their
    significance marks and become floats.
    """
    import re

    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header_idx = next(k for k, ln in enumerate(lines) if re.split(r" {2,}", ln.strip()) == list(columns))
    rows = []
    for ln in lines[header_idx + 1:]:
        parts = re.split(r" {2,}", ln.strip())
        if len(parts) != len(columns):
            break
        row = {}
        for c, s in zip(columns, parts):
            t = s.rstrip(MARKS)
            try:
                row[c] = float(t)
            except ValueError:
                row[c] = "" if s == "." else s
        rows.append(row)
    return rows
