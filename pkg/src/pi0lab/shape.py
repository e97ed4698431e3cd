"""Shape-constrained and threshold comparator estimators.

Three benchmarks for the null-proportion estimators:
  * the decreasing-density MLE (least concave majorant of the empirical cdf)
    evaluated at the largest observation,
  * the tail-fraction estimator at a threshold lambda,
  * its oracle version thresholding exactly where the alternative density
    vanishes (lambda = 1 - delta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from .histogram import EstimateResult
from .model import PValueSample


@dataclass(frozen=True)
class GrenanderFit:
    """Decreasing step density: left derivative of the least concave majorant.

    ``slopes[i]`` is the density on (knots[i], knots[i+1]]; slopes are
    nonincreasing and integrate to 1 against the knot gaps.
    """

    knots: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        slopes = np.asarray(self.slopes, dtype=float)
        if knots.size != slopes.size + 1 or knots.size < 2:
            raise ValueError("need one more knot than slopes")
        if np.any(np.diff(knots) <= 0) or knots[0] != 0.0 or knots[-1] != 1.0:
            raise ValueError("knots must increase strictly from 0 to 1")
        if np.any(np.diff(slopes) > 1e-11) or np.any(slopes < 0):
            raise ValueError("slopes must be nonincreasing and nonnegative")
        knots.setflags(write=False)
        slopes.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "slopes", slopes)

    def density(self, x):
        """Step-density value; left-continuous, density(0) = first slope."""
        idx = np.searchsorted(self.knots, np.asarray(x, float), side="left") - 1
        idx = np.clip(idx, 0, self.slopes.size - 1)
        out = self.slopes[idx]
        return out if out.ndim else float(out)

    def cdf(self, x):
        """The least concave majorant itself (piecewise linear)."""
        heights = np.concatenate(([0.0], np.cumsum(self.slopes * np.diff(self.knots))))
        out = np.interp(np.asarray(x, float), self.knots, heights)
        return out if out.ndim else float(out)


def grenander(sample: PValueSample) -> GrenanderFit:
    """Least-concave-majorant fit of a decreasing density on [0, 1].

    Slopes come from a weighted decreasing isotonic regression of the
    empirical-cdf chord slopes over the unique observation grid (tied values
    merge into one cdf jump).  Observations at exactly 0 keep their mass but
    form no grid point: a point mass at 0 has no finite density, so that mass
    rides on the first positive segment.
    """
    ux, cnt = np.unique(sample.values, return_counts=True)
    ys = np.cumsum(cnt) / sample.n
    pos = ux > 0.0
    ux, ys = ux[pos], ys[pos]
    xs = np.concatenate(([0.0], ux))
    ys = np.concatenate(([0.0], ys))
    if ux.size == 0 or ux[-1] < 1.0:
        xs = np.concatenate((xs, [1.0]))
        ys = np.concatenate((ys, [1.0]))
    gaps = np.diff(xs)
    raw = np.diff(ys) / gaps
    slopes = isotonic_regression(raw, weights=gaps, increasing=False).x
    change = np.ones(slopes.size, dtype=bool)
    change[:-1] = ~np.isclose(slopes[:-1], slopes[1:], rtol=0.0, atol=1e-12)
    return GrenanderFit(np.concatenate(([0.0], xs[1:][change])), slopes[change])


def theta_hat_langaas(sample: PValueSample) -> EstimateResult:
    """Decreasing-density fit evaluated at the largest observation."""
    fit = grenander(sample)
    x_max = float(sample.values.max())
    return EstimateResult(
        theta_hat=float(fit.density(x_max)),
        method="langaas",
        trace={"x_max": x_max, "knots": fit.knots.size},
    )


def theta_hat_storey(sample: PValueSample, lam: float = 0.5) -> EstimateResult:
    """Fraction of observations above lambda, scaled by 1/(1 - lambda)."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must be in (0, 1), got {lam}")
    tail = int(np.count_nonzero(sample.values > lam))
    return EstimateResult(
        theta_hat=tail / (sample.n * (1.0 - lam)),
        method="storey",
        trace={"lambda": lam, "tail_count": tail},
    )


def theta_hat_oracle(sample: PValueSample, delta: float) -> EstimateResult:
    """Tail fraction over the known null interval [1-delta, 1], scaled by 1/delta.

    Coincides with the lambda = 1-delta threshold estimator except on the
    measure-zero boundary point (this count is closed at 1-delta).
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    tail = int(np.count_nonzero(sample.values >= 1.0 - delta))
    return EstimateResult(
        theta_hat=tail / (sample.n * delta),
        method="oracle",
        trace={"delta": delta, "tail_count": tail},
    )
