"""Histogram density estimate and the minimum-cell estimator of the null weight.

The histogram on a partition I estimates each cell height by n_k/(n |I_k|).
Because the mixture density is bounded below by its uniform component, the
smallest cell height estimates the null proportion: cells where the
alternative density vanishes have height close to theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .model import PValueSample
from .partitions import HistogramCounts, Partition, cell_counts

DEFAULT_CELLS = 8


@dataclass(frozen=True)
class StepDensity:
    """Piecewise-constant density on a partition."""

    partition: Partition
    heights: np.ndarray

    def __post_init__(self):
        heights = np.asarray(self.heights, dtype=float)
        if heights.size != self.partition.n_cells or np.any(heights < 0):
            raise ValueError("need one nonnegative height per cell")
        if abs(float(heights @ self.partition.widths) - 1.0) > 1e-9:
            raise ValueError("heights must integrate to 1")
        heights.setflags(write=False)
        object.__setattr__(self, "heights", heights)

    def __call__(self, x):
        idx = np.searchsorted(self.partition.breakpoints, np.asarray(x, float), side="right") - 1
        idx = np.clip(idx, 0, self.partition.n_cells - 1)
        out = self.heights[idx]
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class EstimateResult:
    """An estimator's output: the estimate, its method tag, and a trace."""

    theta_hat: float
    method: str
    trace: dict[str, Any]

    def __post_init__(self):
        if not math.isfinite(self.theta_hat) or self.theta_hat < 0.0:
            raise ValueError(f"theta_hat must be finite and >= 0, got {self.theta_hat}")


def histogram_density(sample: PValueSample, partition: Partition,
                      counts: HistogramCounts | None = None) -> StepDensity:
    """Histogram estimate with heights n_k/(n |I_k|)."""
    if counts is None:
        counts = cell_counts(sample, partition)
    heights = counts.counts / (sample.n * partition.widths)
    return StepDensity(partition, heights)


def theta_hat_min(sample: PValueSample, partition: Partition | None = None) -> EstimateResult:
    """Minimum cell height of the histogram; ties go to the smallest cell index."""
    if partition is None:
        from .partitions import regular
        partition = regular(DEFAULT_CELLS)
    density = histogram_density(sample, partition)
    k_hat = int(np.argmin(density.heights))
    return EstimateResult(
        theta_hat=float(density.heights[k_hat]),
        method="hist",
        trace={"cell_index": k_hat, "cells": partition.n_cells,
               "cell": (float(partition.breakpoints[k_hat]),
                        float(partition.breakpoints[k_hat + 1]))},
    )
