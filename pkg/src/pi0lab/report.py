"""Delimited output and figures for simulation reports.

The CSV is the determinism contract: identical config and seed produce a
byte-identical file regardless of worker count.  Figures are rendered next
to the CSV as a convenience and carry no additional numbers.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .model import MixtureParams, mixture_density
from .simulate import SimReport

CSV_COLUMNS = ("model", "estimator", "n", "mse", "variance", "bias",
               "slope", "intercept", "ref_slope", "ref_intercept")


def _fmt(value, precision: int) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    v = float(value)
    if math.isnan(v):
        return "nan"
    return f"%.{precision}g" % v


def report_rows(report: SimReport) -> list[dict]:
    """One dict per (estimator, n) cell, in estimator-major order."""
    rows = []
    for tag in report.estimators:
        fit = report.fits.get(tag)
        slope, intercept = fit if fit is not None else (None, None)
        for n in report.n_grid:
            c = report.cells[(tag, n)]
            rows.append({
                "model": report.model_label,
                "estimator": tag,
                "n": n,
                "mse": c.mse,
                "variance": c.variance,
                "bias": c.bias,
                "slope": slope,
                "intercept": intercept,
                "ref_slope": report.ref_slope,
                "ref_intercept": report.ref_intercept,
            })
    return rows


def to_csv(report: SimReport, path, precision: int = 6) -> None:
    if not 1 <= precision <= 17:
        raise ValueError("precision must be in 1..17")
    lines = [",".join(CSV_COLUMNS)]
    for row in report_rows(report):
        lines.append(",".join(
            row["model"] if col == "model"
            else row["estimator"] if col == "estimator"
            else _fmt(row[col], precision)
            for col in CSV_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def summary_text(report: SimReport) -> str:
    """Short human-readable digest: one line per estimator."""
    p = report.params
    lines = [f"model {report.model_label}: theta={p.theta:g} delta={p.delta:g} "
             f"s={p.shape_s:g}, n in {list(report.n_grid)}"]
    n_last = report.n_grid[-1]
    for tag in report.estimators:
        fit = report.fits.get(tag)
        slope = f"{fit[0]:+.3f}" if fit is not None else "  n/a"
        c = report.cells[(tag, n_last)]
        lines.append(f"  {tag:<8s} slope {slope}   "
                     f"mse(n={n_last}) {c.mse:.3e}   reps {c.reps_used}")
    if report.failures:
        lines.append(f"  {len(report.failures)} replication failure(s) recorded")
    return "\n".join(lines)


def figure_path_for(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")


def render_mse_figure(report: SimReport, path) -> None:
    """Log-log MSE curves per estimator, with the n^-1 reference line when
    the model has a vanishing interval."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ns = np.asarray(report.n_grid, dtype=float)
    for tag in report.estimators:
        mse = np.array([report.cells[(tag, n)].mse for n in report.n_grid])
        ok = np.isfinite(mse) & (mse > 0)
        if ok.any():
            ax.loglog(ns[ok], mse[ok], marker="o", markersize=4, label=tag)
    if report.ref_intercept is not None:
        ref = np.exp(report.ref_intercept) / ns
        ax.loglog(ns, ref, color="black", linestyle="--", linewidth=1,
                  label="reference 1/n")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("MSE")
    ax.set_title(f"model {report.model_label}")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_density_figure(params: MixtureParams, path, n_grid: int = 1001) -> None:
    """Mixture density on [0, 1] with the null level and the vanishing point."""
    x = np.linspace(0.0, 1.0, n_grid)
    g = mixture_density(x, params)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(x, g, label="mixture density")
    ax.axhline(params.theta, color="gray", linestyle=":", label="null proportion")
    if params.delta > 0:
        ax.axvline(1.0 - params.delta, color="black", linestyle="--",
                   linewidth=1, label="vanishing point")
    ax.set_xlabel("p-value")
    ax.set_ylabel("density")
    ax.set_ylim(bottom=0.0)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
