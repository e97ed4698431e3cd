"""Efficiency bounds for the null proportion, and the one-step estimator.

In the mixture g = theta + (1-theta) f with f vanishing on [1-delta, 1], the
hardest-submodel calculation gives the efficient score

    score(x) = 1/theta - 1/(theta(1 - theta delta))   on [0, 1-delta),
    score(x) = 1/theta                                 on [1-delta, 1],

efficient information delta/(theta(1 - theta delta)), efficient influence
(1/delta) 1[x >= 1-delta] - theta, and optimal asymptotic variance
theta(1/delta - theta).  At delta = 0 the information is zero and no
finite-variance root-n estimator exists: the score and influence are
undefined there and the variance bound is infinite.

The one-step estimator takes any root-n pilot and applies a single Newton
update along a plug-in score, with the vanishing point 1-delta estimated on
the complementary half of a two-fold split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .crossval import theta_hat_cr
from .histogram import EstimateResult
from .model import PValueSample


def _check_theta_delta(theta: float, delta: float, allow_zero_delta: bool = False):
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must be in (0, 1), got {theta}")
    low_ok = delta >= 0.0 if allow_zero_delta else delta > 0.0
    if not (low_ok and delta < 1.0):
        raise ValueError(f"delta out of range, got {delta}")


def efficient_score(x, theta: float, delta: float):
    """Efficient score for theta; two-level step with the drop before 1-delta."""
    _check_theta_delta(theta, delta)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("x must lie in [0, 1]")
    head = 1.0 / theta - 1.0 / (theta * (1.0 - theta * delta))
    tail = 1.0 / theta
    out = np.where(x < 1.0 - delta, head, tail)
    return out if out.ndim else float(out)


def efficient_information(theta: float, delta: float) -> float:
    """delta/(theta(1 - theta delta)); zero exactly at delta = 0."""
    _check_theta_delta(theta, delta, allow_zero_delta=True)
    return delta / (theta * (1.0 - theta * delta))


def efficient_influence(x, theta: float, delta: float):
    """Efficient influence (1/delta) 1[x >= 1-delta] - theta; score/information."""
    _check_theta_delta(theta, delta)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("x must lie in [0, 1]")
    out = np.where(x >= 1.0 - delta, 1.0 / delta - theta, -theta)
    return out if out.ndim else float(out)


def optimal_variance(theta: float, delta: float) -> float:
    """theta(1/delta - theta), the asymptotic variance bound; inf at delta = 0."""
    _check_theta_delta(theta, delta, allow_zero_delta=True)
    if delta == 0.0:
        return math.inf
    return theta * (1.0 / delta - theta)


@dataclass(frozen=True)
class EfficiencyQuantities:
    """Score, influence and information bundled for one (theta, delta)."""

    theta: float
    delta: float
    information: float
    score: Callable
    influence: Callable


def efficiency_quantities(theta: float, delta: float) -> EfficiencyQuantities:
    _check_theta_delta(theta, delta)
    return EfficiencyQuantities(
        theta=theta,
        delta=delta,
        information=efficient_information(theta, delta),
        score=lambda x: efficient_score(x, theta, delta),
        influence=lambda x: efficient_influence(x, theta, delta),
    )


@dataclass(frozen=True)
class DeltaEstimate:
    """Estimated width of the vanishing interval, with its selection record."""

    delta: float
    lambda_hat: float
    m_hat: int
    low_confidence: bool
    result: EstimateResult


def delta_hat(sample: PValueSample, m_min: int = 3, m_max: int = 5,
              p_mode="auto") -> DeltaEstimate:
    """Estimate the vanishing-interval width via right-anchored window selection.

    Runs the window selector over partitions with mu = 1 and returns
    1 - lambda_hat.  When the data look flat everywhere (window height within
    three standard errors of 1) the interval is unidentified and the result
    is flagged low-confidence.
    """
    res = theta_hat_cr(sample, m_min=m_min, m_max=m_max,
                       right_anchored=True, p_mode=p_mode)
    lam = res.trace["lambda_hat"]
    delta = 1.0 - lam
    th_win = res.theta_hat
    se = math.sqrt(max(th_win * (1.0 / delta - th_win), 0.0) / sample.n)
    return DeltaEstimate(
        delta=delta,
        lambda_hat=lam,
        m_hat=res.trace["m_hat"],
        low_confidence=bool(th_win >= 1.0 - 3.0 * se),
        result=res,
    )


def _fold_scores(values: np.ndarray, theta: float, delta: float):
    """Plug-in score values on one fold; None when the fold is degenerate."""
    head = 1.0 / theta - 1.0 / (theta * (1.0 - theta * delta))
    below = values < 1.0 - delta
    if below.all() or not below.any():
        return None
    return np.where(below, head, 1.0 / theta)


def one_step(sample: PValueSample, theta_init: float,
             delta: float | DeltaEstimate | None = None,
             m_min: int = 3, m_max: int = 5) -> EstimateResult:
    """Single Newton update of a pilot estimate along the plug-in score.

    The sample is split at m = n//2.  Scores on each half use a vanishing
    point estimated on the other half (cross-fit), or the supplied ``delta``
    on both halves when it is given.  The pilot is frozen on the n^(-1/2)
    discretization grid.  Falls back to the pilot, flagged, when a scoring
    half is degenerate (entirely on one side of its vanishing point) or the
    update turns negative.
    """
    n = sample.n
    if n < 4:
        raise ValueError("need n >= 4")
    if not 0.0 < theta_init < 1.0:
        raise ValueError(f"theta_init must be in (0, 1), got {theta_init}")
    if isinstance(delta, DeltaEstimate):
        delta = delta.delta
    if delta is not None and not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")

    mesh = 1.0 / math.sqrt(n)
    th = round(theta_init / mesh) * mesh
    th = min(max(th, mesh), 1.0 - mesh) if mesh < 0.5 else 0.5

    mid = n // 2
    first, second = sample.values[:mid], sample.values[mid:]
    if delta is not None:
        d_first = d_second = delta
    else:
        # each scoring half uses the vanishing point fitted on the other half
        d_first = delta_hat(PValueSample(second), m_min, m_max).delta
        d_second = delta_hat(PValueSample(first), m_min, m_max).delta

    trace = {"theta_init": theta_init, "theta_discretized": th,
             "delta_first": d_first, "delta_second": d_second, "fallback": None}
    l_first = _fold_scores(first, th, d_first)
    l_second = _fold_scores(second, th, d_second)
    if l_first is None or l_second is None:
        trace["fallback"] = "degenerate fold"
        return EstimateResult(theta_hat=theta_init, method="onestep", trace=trace)
    scores = np.concatenate((l_first, l_second))
    theta_new = th - scores.sum() / (scores @ scores)
    if not math.isfinite(theta_new) or theta_new < 0.0:
        trace["fallback"] = "negative or nonfinite update"
        return EstimateResult(theta_hat=theta_init, method="onestep", trace=trace)
    trace["newton_step"] = theta_new - th
    return EstimateResult(theta_hat=float(theta_new), method="onestep", trace=trace)
