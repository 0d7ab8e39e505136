"""Render convergence traces, angle trajectories, error decay, and heatmaps.

Inputs are the tabular files the vme CLI writes:

    summary.csv   iteration,group,median,p04,p96,count
    errors.csv    iteration,group,median,p25,p75,count
    heatmap.csv   iteration,dropped,<bin center columns>
    runs.json     {"schema": "vme.runs/1", "records": [...], ...}

Rendering is deterministic: fixed figure geometry, fixed color order, a
fixed SVG hash salt, and no timestamps in the image metadata, so repeated
invocations over the same inputs are byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RUNS_SCHEMA = "vme.runs/1"

KINDS = ("traces", "angles", "errors", "heatmap")

_RC = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "svg.hashsalt": "vme-plots",
    "axes.prop_cycle": plt.cycler(
        color=["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
               "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]
    ),
}


class SchemaError(Exception):
    """An input file does not match the documented schema."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    labels: tuple[str, ...] = ()
    xlabel: str = "iteration"
    ylabel: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("at least one input file is required")
        missing = [p for p in self.inputs if not Path(p).exists()]
        if missing:
            raise SchemaError(f"input files not found: {missing}")


def _read_band_csv(path, columns):
    """Rows of a banded CSV grouped by the `group` column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration as exc:
            raise SchemaError(f"{path}: empty file") from exc
        if header != columns:
            raise SchemaError(f"{path}: expected header {','.join(columns)}")
        groups: dict[float, list[list[float]]] = {}
        for row in reader:
            if len(row) != len(columns):
                raise SchemaError(f"{path}: malformed row {row}")
            values = [float(v) for v in row]
            groups.setdefault(values[1], []).append(values)
    out = {}
    for key, rows in groups.items():
        rows.sort(key=lambda r: r[0])
        out[key] = np.asarray(rows)
    return out


def read_summary(path):
    return _read_band_csv(path, ["iteration", "group", "median", "p04", "p96", "count"])


def read_errors(path):
    return _read_band_csv(path, ["iteration", "group", "median", "p25", "p75", "count"])


def read_heatmap(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration as exc:
            raise SchemaError(f"{path}: empty file") from exc
        if header[:2] != ["iteration", "dropped"]:
            raise SchemaError(f"{path}: expected iteration,dropped,<bin centers> header")
        centers = np.array([float(c) for c in header[2:]])
        rows = [[float(v) for v in row] for row in reader]
    if rows and any(len(r) != 2 + centers.size for r in rows):
        raise SchemaError(f"{path}: row width does not match header")
    counts = np.asarray([r[2:] for r in rows]) if rows else np.zeros((0, centers.size))
    return centers, counts


def read_runs(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != RUNS_SCHEMA:
        raise SchemaError(f"{path}: expected schema {RUNS_SCHEMA}")
    return doc


def _label_for(spec, index):
    if index < len(spec.labels):
        return spec.labels[index]
    return Path(spec.inputs[index]).parent.name or Path(spec.inputs[index]).stem


def _fig_traces(spec):
    groups = read_summary(spec.inputs[0])
    fig, ax = plt.subplots()
    for key in sorted(groups):
        rows = groups[key]
        (line,) = ax.plot(rows[:, 0], rows[:, 2], label=f"element {key:g}")
        ax.fill_between(rows[:, 0], rows[:, 3], rows[:, 4], alpha=0.25, color=line.get_color())
        ax.axhline(key, color=line.get_color(), linestyle=":", linewidth=0.8)
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel or "functional value")
    ax.legend(loc="best")
    return fig


def _fig_angles(spec):
    doc = read_runs(spec.inputs[0])
    records = [r for r in doc["records"] if r["status"] != "failed"]
    if not records:
        fig, ax = plt.subplots()
        ax.set_xlabel(spec.xlabel)
        ax.set_ylabel("angle")
        return fig
    n_angles = len(records[0]["angles_i"][0])
    fig, axes = plt.subplots(2, n_angles, squeeze=False, figsize=(3.5 * n_angles, 5.0))
    by_group: dict[float, list[dict]] = {}
    for rec in records:
        key = rec.get("assigned_target")
        if key is not None:
            by_group.setdefault(float(key), []).append(rec)
    for row, side in enumerate(("angles_i", "angles_j")):
        for col in range(n_angles):
            ax = axes[row][col]
            for key in sorted(by_group):
                data = np.array([[step[col] for step in r[side]] for r in by_group[key]])
                its = np.arange(data.shape[1])
                (line,) = ax.plot(its, np.median(data, axis=0), label=f"element {key:g}")
                ax.fill_between(
                    its,
                    np.percentile(data, 4.0, axis=0),
                    np.percentile(data, 96.0, axis=0),
                    alpha=0.25,
                    color=line.get_color(),
                )
            ax.set_xlabel(spec.xlabel)
            ax.set_ylabel(f"{side}[{col}]")
    axes[0][0].legend(loc="best", fontsize="small")
    fig.tight_layout()
    return fig


def _fig_errors(spec):
    per_file = [read_errors(path) for path in spec.inputs]
    keys = sorted({k for groups in per_file for k in groups})
    if not keys:
        raise SchemaError("no error groups found in the inputs")
    ncol = min(3, len(keys))
    nrow = (len(keys) + ncol - 1) // ncol
    fig, axes = plt.subplots(nrow, ncol, squeeze=False, figsize=(3.6 * ncol, 2.8 * nrow))
    for idx, key in enumerate(keys):
        ax = axes[idx // ncol][idx % ncol]
        for f_idx, groups in enumerate(per_file):
            if key not in groups:
                continue
            rows = groups[key]
            (line,) = ax.plot(rows[:, 0], rows[:, 2], label=_label_for(spec, f_idx))
            ax.fill_between(rows[:, 0], rows[:, 3], rows[:, 4], alpha=0.25, color=line.get_color())
        ax.set_yscale("log")
        ax.set_title(f"element {key:g}", fontsize="small")
        ax.set_xlabel(spec.xlabel)
        ax.set_ylabel(spec.ylabel or "|error|")
    axes[0][0].legend(loc="best", fontsize="x-small")
    for idx in range(len(keys), nrow * ncol):
        axes[idx // ncol][idx % ncol].set_axis_off()
    fig.tight_layout()
    return fig


def _fig_heatmap(spec):
    centers, counts = read_heatmap(spec.inputs[0])
    fig, ax = plt.subplots()
    if counts.size and centers.size:
        width = centers[1] - centers[0] if centers.size > 1 else 1.0
        x_edges = np.arange(counts.shape[0] + 1) - 0.5
        y_edges = np.concatenate([centers - width / 2, [centers[-1] + width / 2]])
        mesh = ax.pcolormesh(x_edges, y_edges, counts.T, cmap="viridis", rasterized=False)
        fig.colorbar(mesh, ax=ax, label="runs per bin")
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel or "functional value")
    return fig


_RENDERERS = {
    "traces": _fig_traces,
    "angles": _fig_angles,
    "errors": _fig_errors,
    "heatmap": _fig_heatmap,
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    out = Path(spec.output)
    suffix = out.suffix.lower()
    if suffix not in (".png", ".svg"):
        raise SchemaError(f"unsupported output format {suffix!r} (use .png or .svg)")
    with plt.rc_context(_RC):
        fig = _RENDERERS[spec.kind](spec)
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            if suffix == ".png":
                fig.savefig(out, format="png", metadata={"Software": "vme-plots"})
            else:
                fig.savefig(out, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return str(out)
