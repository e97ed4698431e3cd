"""Two-component p-value mixture model.

Observations are p-values drawn iid from

    g(x) = theta + (1 - theta) * f(x),        x in [0, 1],

where ``theta`` is the proportion of true nulls (uniform component) and ``f``
is the density of p-values under the alternative.  The parametric family used
throughout the package is

    f(x) = s/(1-delta) * (1 - x/(1-delta))^(s-1)   for x in [0, 1-delta],
    f(x) = 0                                       for x in (1-delta, 1],

a decreasing polynomial density that vanishes on the last ``delta`` of the
unit interval.  A positive ``delta`` is what makes root-n estimation of theta
possible; ``delta = 0`` is the degenerate boundary case.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class MixtureParams:
    """Ground-truth mixture parameters (theta, delta, shape_s).

    theta must lie strictly inside (0, 1); pure-null or pure-alternative data
    is generated directly from a uniform / alternative sampler instead.
    """

    theta: float
    delta: float
    shape_s: float

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must be in (0, 1), got {self.theta}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")
        if not self.shape_s > 1.0:
            raise ValueError(f"shape_s must be > 1, got {self.shape_s}")


@dataclass(frozen=True)
class PValueSample:
    """A vector of p-values in [0, 1]."""

    values: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("sample must be a nonempty 1-d vector")
        if np.any(~np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("p-values must lie in [0, 1]")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "n", values.size)


def _check_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("x must lie in [0, 1]")
    return x


def alt_density(x, params: MixtureParams):
    """Density f of the alternative component; zero past 1-delta."""
    x = _check_x(x)
    om = 1.0 - params.delta
    s = params.shape_s
    inside = x <= om
    out = np.where(inside, s / om * np.maximum(1.0 - x / om, 0.0) ** (s - 1.0), 0.0)
    return out if out.ndim else float(out)


def alt_cdf(x, params: MixtureParams):
    """Distribution function F of the alternative component."""
    x = _check_x(x)
    om = 1.0 - params.delta
    s = params.shape_s
    out = np.where(x <= om, 1.0 - np.maximum(1.0 - x / om, 0.0) ** s, 1.0)
    return out if out.ndim else float(out)


def mixture_density(x, params: MixtureParams):
    """g(x) = theta + (1-theta) f(x)."""
    th = params.theta
    out = th + (1.0 - th) * np.asarray(alt_density(x, params))
    return out if out.ndim else float(out)


def mixture_cdf(x, params: MixtureParams):
    """G(x) = theta x + (1-theta) F(x)."""
    x = _check_x(x)
    th = params.theta
    out = th * x + (1.0 - th) * np.asarray(alt_cdf(x, params))
    return out if out.ndim else float(out)


def l2_norm_squared(params: MixtureParams) -> float:
    """Integral of g^2 over [0, 1], in closed form.

    g^2 = theta^2 + 2 theta (1-theta) f + (1-theta)^2 f^2 and
    int f^2 = s^2 / ((1-delta)(2s-1)).
    """
    th, d, s = params.theta, params.delta, params.shape_s
    int_f2 = s * s / ((1.0 - d) * (2.0 * s - 1.0))
    return th * th + 2.0 * th * (1.0 - th) + (1.0 - th) ** 2 * int_f2


def sample(n: int, params: MixtureParams, seed: int) -> PValueSample:
    """Draw n iid p-values from the mixture, deterministically in the seed.

    Each draw is uniform with probability theta; otherwise the alternative
    variate comes from the inverse cdf, x = (1-delta)(1 - (1-u)^(1/s)).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    comp = rng.random(n) < params.theta
    u = rng.random(n)
    om = 1.0 - params.delta
    alt = om * (1.0 - (1.0 - u) ** (1.0 / params.shape_s))
    return PValueSample(np.where(comp, u, alt))


def class_membership_check(f_grid, delta: float) -> bool:
    """Whether a gridded function looks like a valid alternative density.

    ``f_grid`` is a sequence of (x, f(x)) pairs with x sorted ascending and
    covering [0, 1].  True iff the values are nonincreasing, strictly positive
    before 1-delta, zero from 1-delta on, and the trapezoid integral is 1
    within 1e-6.  A uniform admixture c + (1-c) f fails (its floor is c > 0),
    which is exactly the identifiability boundary for this class.
    """
    grid = np.asarray(f_grid, dtype=float)
    if grid.ndim != 2 or grid.shape[1] != 2 or grid.shape[0] < 2:
        raise ValueError("f_grid must be a sequence of (x, value) pairs")
    x, y = grid[:, 0], grid[:, 1]
    if np.any(np.diff(x) <= 0):
        raise ValueError("grid x values must be strictly increasing")
    if x[0] != 0.0 or x[-1] != 1.0:
        raise ValueError("grid must cover [0, 1]")
    om = 1.0 - delta
    # 1e-12 slack absorbs float noise in evaluated densities
    if np.any(np.diff(y) > 1e-12):
        return False
    if np.any(y[x < om] <= 0.0):
        return False
    if np.any(np.abs(y[x >= om]) > 1e-12):
        return False
    return abs(np.trapezoid(y, x) - 1.0) < 1e-6
