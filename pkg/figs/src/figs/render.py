"""Figure rendering for pipeline CSV outputs.

Five kinds:
  heatmap  class- or category-labeled ratio/correlation matrix CSV;
           diverging palette centered at 1 (red above, blue below),
           optional log color scale for wide-range correlation matrices
  lorenz   (f, C) cumulative-wealth curve vs the equality diagonal
  graph    category correlation edges (c_i, c_j, rho) with optional
           community colors; force-directed layout with a fixed seed
  scatter  per-category average feature sets (age vs status, symbol-coded
           by the gender share)
  weekly   one 7-day polyline per group row (d0..d6), legend by group

All figures are drawn on the Agg backend with pinned geometry so that a
re-render of identical inputs is byte-identical.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import networkx as nx
import numpy as np
from matplotlib.colors import TwoSlopeNorm

log = logging.getLogger("figs")

KINDS = ("heatmap", "lorenz", "graph", "scatter", "weekly")

# column contracts for the table-shaped inputs (matrix CSVs are
# label-row/label-column shaped and validated separately)
REQUIRED_COLUMNS = {
    "lorenz": ("f", "C"),
    "graph": ("c_i", "c_j", "rho"),
    "scatter": ("mcc", "age", "gender", "seg"),
    "weekly": ("group", "d0", "d1", "d2", "d3", "d4", "d5", "d6"),
}

DAY_LABELS = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]


class SchemaError(ValueError):
    """Input file does not match the documented schema; names the column."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[Path, ...]
    out: Path
    log_scale: bool = False         # log color scale (heatmap only)
    layout_seed: int = 0            # force-directed layout seed (graph only)
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input file is required")


def _read_table(path: Path, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise SchemaError(f"{path}: missing required column {col!r}")
        return list(reader)


def _read_matrix(path: Path) -> tuple[np.ndarray, list[str]]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or len(rows[0]) < 2:
        raise SchemaError(f"{path}: missing matrix label header row")
    labels = rows[0][1:]
    if len(rows) - 1 != len(labels):
        raise SchemaError(f"{path}: matrix is not square against header labels")
    data = [[float(x) if x else math.nan for x in r[1:]] for r in rows[1:]]
    return np.array(data), labels


def render(spec: FigureSpec) -> dict:
    """Draw and save the figure; returns metadata for callers/tests.

    The metadata dict always has "kind" and "out"; heatmaps add "norm"
    and "log_scale", graphs add "n_edges" and "watermark".
    """
    fig = plt.figure(figsize=(7.0, 5.5), dpi=150)
    try:
        meta = _DRAWERS[spec.kind](fig, spec)
        fig.savefig(spec.out, metadata={"Software": "figs"})
    finally:
        plt.close(fig)
    meta.update(kind=spec.kind, out=str(spec.out))
    return meta


def _draw_heatmap(fig, spec: FigureSpec) -> dict:
    m, labels = _read_matrix(spec.inputs[0])
    ax = fig.add_subplot(111)
    data = m
    center = 1.0
    if spec.log_scale:
        with np.errstate(divide="ignore", invalid="ignore"):
            data = np.log10(m)
        center = 0.0
    finite = data[np.isfinite(data)]
    if finite.size == 0:
        raise SchemaError(f"{spec.inputs[0]}: matrix has no finite entries")
    # diverging scale centered at the neutral ratio; pad so both sides exist
    span = max(np.max(np.abs(finite - center)), 1e-6)
    norm = TwoSlopeNorm(vcenter=center, vmin=center - span, vmax=center + span)
    im = ax.imshow(data, cmap="RdBu_r", norm=norm)
    ax.set_xticks(range(len(labels)), labels, rotation=90 if len(labels) > 12 else 0)
    ax.set_yticks(range(len(labels)), labels)
    cbar = fig.colorbar(im, ax=ax)
    cbar.set_label("log10(ratio)" if spec.log_scale else "ratio")
    ax.set_title(spec.title or "")
    fig.tight_layout()
    return {"norm": norm, "log_scale": spec.log_scale, "shape": m.shape}


def _draw_lorenz(fig, spec: FigureSpec) -> dict:
    rows = _read_table(spec.inputs[0], REQUIRED_COLUMNS["lorenz"])
    f = np.array([float(r["f"]) for r in rows])
    c = np.array([float(r["C"]) for r in rows])
    ax = fig.add_subplot(111)
    ax.plot([0, 1], [0, 1], "k--", lw=1, label="equality")
    ax.plot(f, c, color="#b2182b", lw=2, label="observed")
    ax.fill_between(f, c, f, color="#b2182b", alpha=0.15)
    ax.set_xlabel("population fraction")
    ax.set_ylabel("cumulative spending share")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend(loc="upper left")
    ax.set_title(spec.title or "")
    fig.tight_layout()
    return {"points": len(rows)}


def _draw_graph(fig, spec: FigureSpec) -> dict:
    rows = _read_table(spec.inputs[0], REQUIRED_COLUMNS["graph"])
    ax = fig.add_subplot(111)
    ax.set_axis_off()
    ax.set_title(spec.title or "")
    if not rows:
        ax.text(0.5, 0.5, "no edges to draw", transform=ax.transAxes,
                ha="center", va="center", fontsize=20, color="0.6", alpha=0.7)
        fig.tight_layout()
        return {"n_edges": 0, "watermark": True}
    g = nx.Graph()
    for r in rows:
        g.add_edge(r["c_i"], r["c_j"], weight=float(r["rho"]))
    colors = None
    if len(spec.inputs) > 1:
        comm_rows = _read_table(spec.inputs[1], ("mcc", "community"))
        comm = {r["mcc"]: int(r["community"]) for r in comm_rows}
        cmap = plt.get_cmap("tab20")
        colors = [cmap(comm.get(n, 0) % 20) for n in g.nodes]
    pos = nx.spring_layout(g, seed=spec.layout_seed)
    widths = [0.5 + 0.5 * g[u][v]["weight"] for u, v in g.edges]
    nx.draw_networkx_edges(g, pos, ax=ax, width=widths, edge_color="0.7")
    nx.draw_networkx_nodes(g, pos, ax=ax, node_size=180,
                           node_color=colors or "#2166ac")
    nx.draw_networkx_labels(g, pos, ax=ax, font_size=6)
    fig.tight_layout()
    return {"n_edges": g.number_of_edges(), "watermark": False}


def _draw_scatter(fig, spec: FigureSpec) -> dict:
    rows = _read_table(spec.inputs[0], REQUIRED_COLUMNS["scatter"])
    ax = fig.add_subplot(111)
    groups = {
        "male-leaning": ([], [], "^", "#2166ac"),
        "female-leaning": ([], [], "o", "#b2182b"),
    }
    skipped = 0
    for r in rows:
        if not (r["age"] and r["gender"] and r["seg"]):
            skipped += 1
            continue
        key = "male-leaning" if float(r["gender"]) >= 0.5 else "female-leaning"
        groups[key][0].append(float(r["age"]))
        groups[key][1].append(float(r["seg"]))
    for label, (xs, ys, marker, color) in groups.items():
        ax.scatter(xs, ys, marker=marker, s=30, facecolors="none",
                   edgecolors=color, label=label)
    ax.set_xlabel("average age")
    ax.set_ylabel("average status group")
    ax.legend(loc="best")
    ax.set_title(spec.title or "")
    fig.tight_layout()
    return {"points": len(rows) - skipped, "skipped": skipped}


def _draw_weekly(fig, spec: FigureSpec) -> dict:
    rows = _read_table(spec.inputs[0], REQUIRED_COLUMNS["weekly"])
    ax = fig.add_subplot(111)
    cmap = plt.get_cmap("viridis")
    n = max(len(rows), 1)
    for i, r in enumerate(rows):
        y = [float(r[f"d{d}"]) for d in range(7)]
        ax.plot(range(7), y, marker="o", ms=3, lw=1.4,
                color=cmap(i / max(n - 1, 1)), label=str(r["group"]))
    ax.set_xticks(range(7), DAY_LABELS)
    ax.set_ylabel("share of weekly spending")
    ax.legend(loc="best", fontsize=7, ncols=2)
    ax.set_title(spec.title or "")
    fig.tight_layout()
    return {"lines": len(rows)}


_DRAWERS = {
    "heatmap": _draw_heatmap,
    "lorenz": _draw_lorenz,
    "graph": _draw_graph,
    "scatter": _draw_scatter,
    "weekly": _draw_weekly,
}
