"""Convergence-graph rendering from optimizer trace CSVs.

Input format (one row per checkpoint per run):
    function_id, variant, seed, FES, best_error

Per function a panel is drawn; per variant, the mean best-error over seeds at
each FES checkpoint becomes one line. The aggregated series is also written to
a sidecar CSV so the plotted numbers stay machine-checkable.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

REQUIRED_COLUMNS = {"function_id", "variant", "seed", "FES", "best_error"}


@dataclass
class PlotSpec:
    input_csv: str
    output_image: str
    functions: list[int] | None = None     # None = all present
    variants: list[str] | None = None
    log_y: bool = True
    sidecar_csv: str | None = None


def read_traces(path: str) -> list[dict]:
    """Rows of the trace CSV, in file order."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not REQUIRED_COLUMNS.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(REQUIRED_COLUMNS)}, "
                             f"got {reader.fieldnames}")
        for row in reader:
            rows.append({
                "function_id": int(row["function_id"]),
                "variant": row["variant"],
                "seed": int(row["seed"]),
                "FES": int(row["FES"]),
                "best_error": float(row["best_error"]),
            })
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def aggregate_means(rows: list[dict]) -> dict:
    """(function_id, variant) -> list of (FES, mean best_error over seeds)."""
    grouped: dict[tuple[int, str, int], list[float]] = {}
    for row in rows:
        key = (row["function_id"], row["variant"], row["FES"])
        grouped.setdefault(key, []).append(row["best_error"])
    series: dict[tuple[int, str], list[tuple[int, float]]] = {}
    for (fid, variant, fes), values in grouped.items():
        series.setdefault((fid, variant), []).append((fes, float(np.mean(values))))
    for pts in series.values():
        pts.sort(key=lambda p: p[0])
    return series


def write_sidecar(series: dict, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["function_id", "variant", "FES", "mean_best_error"])
        for (fid, variant) in sorted(series, key=lambda k: (k[0], k[1])):
            for fes, mean in series[(fid, variant)]:
                w.writerow([fid, variant, fes, "%.17g" % mean])


def render_convergence(spec: PlotSpec) -> dict:
    """Render the figure and sidecar; returns the aggregated series."""
    rows = read_traces(spec.input_csv)
    if spec.functions is not None:
        rows = [r for r in rows if r["function_id"] in set(spec.functions)]
    if spec.variants is not None:
        rows = [r for r in rows if r["variant"] in set(spec.variants)]
    if not rows:
        raise ValueError("selection matched no traces")

    series = aggregate_means(rows)
    fids = sorted({fid for fid, _ in series})
    variants = sorted({v for _, v in series})

    ncols = min(3, len(fids))
    nrows = -(-len(fids) // ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.5 * ncols, 3.5 * nrows),
                             squeeze=False)
    for k, fid in enumerate(fids):
        ax = axes[k // ncols][k % ncols]
        for variant in variants:
            pts = series.get((fid, variant))
            if not pts:
                continue
            fes = [p[0] for p in pts]
            err = [p[1] for p in pts]
            if spec.log_y:
                # log axes cannot show exact zeros; clip for display only
                err = [max(e, 1e-16) for e in err]
            ax.plot(fes, err, marker="o", markersize=3, label=variant)
        ax.set_title(f"function {fid}")
        ax.set_xlabel("FES")
        ax.set_ylabel("mean best error")
        ax.set_xscale("log")
        if spec.log_y:
            ax.set_yscale("log")
        ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
    for k in range(len(fids), nrows * ncols):
        axes[k // ncols][k % ncols].axis("off")
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(spec.output_image)), exist_ok=True)
    fig.savefig(spec.output_image, dpi=150)
    plt.close(fig)

    if spec.sidecar_csv:
        write_sidecar(series, spec.sidecar_csv)
    return series
