# figures.py - PLOTS FROM RUN OUTPUTS
# Builds plotly figures from the CSV/JSON files the CLI writes and saves
# them as standalone HTML.
#
# Usage:
#   python figures.py --stats results/pilot_stats.csv --plan results/plan.json \
#                     --reports results/*/report.json --out figures/

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
import plotly.graph_objects as go

from components.outputs import read_stats_csv

logger = logging.getLogger(__name__)

CORPORATE_BLUE = "#002147"
GOLD = "#FFD700"


def stats_heatmap(df: pd.DataFrame, column: str = "mean", tau: int = 2) -> go.Figure:
    """log_tau |column| over (alpha1, alpha2); cells without data stay blank"""
    a1_max, a2_max = int(df["alpha1"].max()), int(df["alpha2"].max())
    z = np.full((a2_max + 1, a1_max + 1), np.nan)
    for _, row in df.iterrows():
        value = abs(float(row[column]))
        if value > 0:
            z[int(row["alpha2"]), int(row["alpha1"])] = np.log(value) / np.log(tau)

    fig = go.Figure(data=go.Heatmap(
        z=z,
        x=list(range(a1_max + 1)),
        y=list(range(a2_max + 1)),
        colorscale="Viridis",
        hovertemplate="alpha=(%{x}, %{y})<br>log_tau: %{z:.2f}<extra></extra>",
    ))
    fig.update_layout(
        title=f"log_{tau} |{column}| of mixed differences",
        xaxis_title="alpha1 (particles)",
        yaxis_title="alpha2 (time steps)",
        height=500,
    )
    return fig


def axis_decay_figure(df: pd.DataFrame, column: str = "V1", tau: int = 2) -> go.Figure:
    """Decay of |column| along each axis with the other component 0 and 1"""
    fig = go.Figure()
    styles = {0: "solid", 1: "dash"}
    for axis, other_axis, color in (("alpha1", "alpha2", CORPORATE_BLUE), ("alpha2", "alpha1", GOLD)):
        for other, dash in styles.items():
            rows = df[(df[other_axis] == other) & (df[column].abs() > 0)].sort_values(axis)
            if rows.empty:
                continue
            fig.add_trace(go.Scatter(
                x=rows[axis],
                y=np.log(rows[column].abs()) / np.log(tau),
                mode="lines+markers",
                name=f"along {axis}, {other_axis}={other}",
                line=dict(color=color, dash=dash),
            ))
    fig.update_layout(
        title=f"log_{tau} |{column}| along the axes",
        xaxis_title="level",
        yaxis_title=f"log_{tau} |{column}|",
        height=450,
        hovermode="closest",
    )
    return fig


def index_set_figure(plan: dict) -> go.Figure:
    """Members of each planned index set; boundary members drawn larger"""
    fig = go.Figure()
    for entry in plan.get("index_sets", []):
        members = np.asarray(entry["index_set"])
        edge = {tuple(a) for a in entry["boundary"]}
        sizes = [14 if tuple(a) in edge else 8 for a in members.tolist()]
        fig.add_trace(go.Scatter(
            x=members[:, 0], y=members[:, 1], mode="markers",
            marker=dict(size=sizes, opacity=0.7),
            name=f"L={entry['L']:g} (|I|={entry['size']})",
        ))
    fig.update_layout(title="Index sets I(L)", xaxis_title="alpha1", yaxis_title="alpha2", height=500)
    return fig


def cost_vs_tolerance(reports: Sequence[dict]) -> go.Figure:
    """Model cost against tol_r per estimator mode, log-log"""
    frame = pd.DataFrame([
        {"mode": r["mode"], "tol_r": r["tol_r"], "cost": r["total_model_cost"]}
        for r in reports if r.get("tol_r") is not None
    ])
    fig = go.Figure()
    if not frame.empty:
        for mode, rows in frame.groupby("mode"):
            fig.add_trace(go.Scatter(x=rows["tol_r"], y=rows["cost"], mode="markers", name=mode))
    fig.update_xaxes(type="log", title="TOL_r")
    fig.update_yaxes(type="log", title="model cost")
    fig.update_layout(title="Work against relative tolerance", height=450)
    return fig


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Render figures from run outputs")
    parser.add_argument("--stats", type=str, default=None, help="stats CSV")
    parser.add_argument("--plan", type=str, default=None, help="plan JSON")
    parser.add_argument("--reports", type=str, nargs="*", default=[], help="report JSON files")
    parser.add_argument("--tau", type=int, default=2)
    parser.add_argument("--out", type=str, default="figures")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    figures = {}
    if args.stats:
        df = read_stats_csv(args.stats)
        for column in ("mean", "V1", "V2"):
            figures[f"heatmap_{column}"] = stats_heatmap(df, column, args.tau)
            figures[f"decay_{column}"] = axis_decay_figure(df, column, args.tau)
    if args.plan:
        figures["index_sets"] = index_set_figure(json.loads(Path(args.plan).read_text(encoding="utf-8")))
    if args.reports:
        reports = [json.loads(Path(p).read_text(encoding="utf-8")) for p in args.reports]
        figures["cost_vs_tol"] = cost_vs_tolerance(reports)

    for name, fig in figures.items():
        fig.write_html(str(out / f"{name}.html"), include_plotlyjs="cdn")
        logger.info(f"  ✓ {name}.html")
    if not figures:
        logger.warning("nothing to plot: pass --stats, --plan or --reports")
    return 0


if __name__ == "__main__":
    sys.exit(main())
