"""Regression tables and event-path figures written as static files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .study import LABELS, TABLE_SPECS, TableResult

TITLES = {
    "T3": "Cumulative abnormal tone on disclosure tone and controls",
    "T4": "Abnormal returns on residual event-window tone",
    "T5": "Abnormal returns on residual tone by source group",
    "T6": "Abnormal turnover on absolute residual tone",
}


def stars(p: float) -> str:
    if not np.isfinite(p):
        return ""
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else ""


def table_frame(result: TableResult) -> pd.DataFrame:
    """Long format: one row per (column, regressor)."""
    rows = []
    for c, fit in enumerate(result.fits, start=1):
        sf = fit.summary_frame()
        for name in TABLE_SPECS[result.spec_id][c - 1][1]:
            if name in sf.index:
                r = sf.loc[name]
                rows.append((result.spec_id, c, fit.dependent, name, r.coef, r.se, r.t, r.p))
            else:
                rows.append((result.spec_id, c, fit.dependent, name, np.nan, np.nan, np.nan, np.nan))
    return pd.DataFrame(rows, columns=["table", "column", "dependent", "regressor", "coef", "se", "t", "p"])


def format_table(result: TableResult, digits: int = 3) -> str:
    """Plain-text table: coefficients with stars, t-statistics in parentheses below."""
    specs = TABLE_SPECS[result.spec_id]
    order: list[str] = []
    for _, regs in specs:
        for r in regs:
            if r not in order:
                order.append(r)
    heads = [f"({i}) {LABELS.get(d, d)}" for i, (d, _) in enumerate(specs, start=1)]
    width = max(16, *(len(h) + 2 for h in heads))
    label_w = max(len(LABELS.get(r, r)) for r in order) + 2
    lines = [f"{result.spec_id}: {TITLES.get(result.spec_id, '')}", ""]
    lines.append(" " * label_w + "".join(h.rjust(width) for h in heads))
    lines.append("-" * (label_w + width * len(heads)))
    for r in order:
        coef_cells, t_cells = [], []
        for fit in result.fits:
            if r in fit.columns:
                i = fit.loc(r)
                coef_cells.append(f"{fit.coef[i]:.{digits}f}{stars(fit.pvalue[i])}")
                t_cells.append(f"({fit.tstat[i]:.2f})")
            else:
                coef_cells.append("")
                t_cells.append("")
        lines.append(LABELS.get(r, r).ljust(label_w) + "".join(c.rjust(width) for c in coef_cells))
        lines.append(" " * label_w + "".join(c.rjust(width) for c in t_cells))
    lines.append("-" * (label_w + width * len(heads)))
    lines.append("Firm FE".ljust(label_w) + "".join("Yes".rjust(width) for _ in heads))
    lines.append("Year-quarter FE".ljust(label_w) + "".join("Yes".rjust(width) for _ in heads))
    lines.append("Observations".ljust(label_w) + "".join(f"{f.n:,}".rjust(width) for f in result.fits))
    lines.append("Within R2".ljust(label_w) + "".join(f"{f.r2_within:.3f}".rjust(width) for f in result.fits))
    if any(w is not None for w in result.wald):
        cells = ["" if w is None else f"{w[0]:.2f} [{w[1]:.3f}]" for w in result.wald]
        lines.append("Wald equal".ljust(label_w) + "".join(c.rjust(width) for c in cells))
    lines.append("")
    lines.append("t-statistics from standard errors clustered by firm and year-quarter.")
    lines.append("*** p<0.01, ** p<0.05, * p<0.1")
    return "\n".join(lines) + "\n"


def table_json(result: TableResult) -> dict:
    cols = []
    for c, fit in enumerate(result.fits):
        cols.append({
            "dependent": fit.dependent,
            "n": fit.n,
            "r2_within": fit.r2_within,
            "clusters": fit.n_clusters,
            "dropped": fit.dropped,
            "coef": dict(zip(fit.columns, fit.coef.tolist())),
            "se": dict(zip(fit.columns, fit.se.tolist())),
            "wald": None if result.wald[c] is None else {"stat": result.wald[c][0], "p": result.wald[c][1]},
        })
    return {"table": result.spec_id, "columns": cols}


def write_table(result: TableResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{result.spec_id}.csv", out / f"{result.spec_id}.txt", out / f"{result.spec_id}.json"]
    table_frame(result).to_csv(paths[0], index=False, float_format="%.10g")
    paths[1].write_text(format_table(result))
    paths[2].write_text(json.dumps(table_json(result), indent=1, sort_keys=True) + "\n")
    return paths


# ---------------------------------------------------------------------------
# figures


def plot_curves(curves: pd.DataFrame, title: str, ylabel: str, path: str | Path, bucket_order: Sequence[str]) -> Path:
    """Line chart of bucket mean paths, written as SVG with stable bytes."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": "mediatone", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7, 4.2))
        for label in bucket_order:
            sub = curves.loc[curves["bucket"] == label].sort_values("tau")
            if len(sub):
                ax.plot(sub["tau"], sub["mean"], marker="o", markersize=3, linewidth=1.2, label=label)
        ax.axvline(0, color="grey", linewidth=0.6, linestyle=":")
        ax.axhline(0, color="grey", linewidth=0.6)
        ax.set_xlabel("Trading days relative to the event")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.legend(fontsize=7, ncol=2, frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
