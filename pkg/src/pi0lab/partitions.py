"""Partition algebra on [0, 1].

Window partitions: a dyadic grid of step 1/M with every interior breakpoint
inside one window (lam, mu) removed, so the partition has regular cells on
[0, lam] and [mu, 1] and a single wide cell [lam, mu].  The selection
procedure searches these families for the widest window on which the mixture
density is flat.

Cell probabilities alpha_k and the weighted power sums

    s_ij = sum_k alpha_k^i / |I_k|^j

drive every exact risk formula in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .model import MixtureParams, PValueSample, mixture_cdf

DEFAULT_ORDERS = frozenset({(1, 1), (2, 1), (1, 2), (2, 2), (3, 2)})

_BP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Partition:
    """Breakpoints 0 = b_0 < ... < b_D = 1, optionally with window params.

    ``cr_params = (M, lam, mu)`` marks a window partition: breakpoints are
    multiples of 1/M with none strictly inside (lam, mu).
    """

    breakpoints: np.ndarray
    cr_params: tuple[int, float, float] | None = None

    def __post_init__(self):
        bps = np.asarray(self.breakpoints, dtype=float)
        if bps.ndim != 1 or bps.size < 2:
            raise ValueError("breakpoints must be a 1-d vector of length >= 2")
        if bps[0] != 0.0 or bps[-1] != 1.0 or np.any(np.diff(bps) <= 0):
            raise ValueError("breakpoints must increase strictly from 0 to 1")
        bps.setflags(write=False)
        object.__setattr__(self, "breakpoints", bps)
        if self.cr_params is not None:
            m_cells, lam, mu = self.cr_params
            if m_cells < 2 or m_cells & (m_cells - 1):
                raise ValueError("window partition M must be a power of two >= 2")
            k, l = round(lam * m_cells), round(mu * m_cells)
            if not (0 <= k and k + 2 <= l <= m_cells) or lam != k / m_cells or mu != l / m_cells:
                raise ValueError("window (lam, mu) must be grid multiples with mu - lam >= 2/M")
            on_grid = np.abs(bps * m_cells - np.round(bps * m_cells)) <= _BP_TOL * m_cells
            inside = (bps > lam + _BP_TOL) & (bps < mu - _BP_TOL)
            if not np.all(on_grid) or np.any(inside):
                raise ValueError("breakpoints must be multiples of 1/M and avoid (lam, mu)")

    @property
    def n_cells(self) -> int:
        return self.breakpoints.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def key(self) -> tuple:
        return tuple(self.breakpoints.tolist())


def regular(n_cells: int) -> Partition:
    """Regular partition into n_cells equal cells."""
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    return Partition(np.linspace(0.0, 1.0, n_cells + 1))


def window(m_cells: int, k: int, l: int) -> Partition:
    """Window partition on the 1/M grid with the single wide cell [k/M, l/M]."""
    bps = np.concatenate((np.arange(k + 1), np.arange(l, m_cells + 1))) / m_cells
    return Partition(bps, cr_params=(m_cells, k / m_cells, l / m_cells))


def enumerate_collection(m_min: int, m_max: int, right_anchored: bool = False) -> list[Partition]:
    """All window partitions for M = 2^m, m_min <= m <= m_max.

    Full variant: every (k, l) with 0 <= k, k+2 <= l <= M, M(M-1)/2 per M.
    Right-anchored variant: mu = 1 only, k from 1 to M-2, M-2 per M.
    """
    if not 1 <= m_min <= m_max <= 16:
        raise ValueError("need 1 <= m_min <= m_max <= 16")
    parts = []
    for m in range(m_min, m_max + 1):
        m_cells = 2 ** m
        if right_anchored:
            parts.extend(window(m_cells, k, m_cells) for k in range(1, m_cells - 1))
        else:
            parts.extend(window(m_cells, k, l)
                         for k in range(0, m_cells - 1)
                         for l in range(k + 2, m_cells + 1))
    return parts


@dataclass(frozen=True)
class HistogramCounts:
    """Per-cell observation counts."""

    counts: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "n", int(counts.sum()))


def cell_counts(sample: PValueSample, partition: Partition) -> HistogramCounts:
    """Count observations per cell: half-open cells [a, b), last cell closed."""
    idx = np.searchsorted(partition.breakpoints, sample.values, side="right") - 1
    idx = np.clip(idx, 0, partition.n_cells - 1)
    return HistogramCounts(np.bincount(idx, minlength=partition.n_cells))


def counts_from_sorted(values_sorted: np.ndarray, partition: Partition) -> np.ndarray:
    """Same cell counts from an ascending-sorted value vector, O(D log n)."""
    idx = np.searchsorted(values_sorted, partition.breakpoints[:-1], side="left")
    return np.diff(np.append(idx, values_sorted.size))


@dataclass(frozen=True)
class MomentSet:
    """Cell probabilities and their weighted power sums s_ij."""

    alpha: np.ndarray
    s: dict

    @property
    def sigma_sq(self) -> float:
        """s32 - s21^2, the asymptotic variance scale of the LPO risk."""
        return self.s[(3, 2)] - self.s[(2, 1)] ** 2


def moments_from_probs(partition: Partition, alpha, orders=DEFAULT_ORDERS) -> MomentSet:
    """Assemble s_ij = sum_k alpha_k^i / |I_k|^j from given cell probabilities."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.size != partition.n_cells:
        raise ValueError("alpha must have one entry per cell")
    w = 1.0 / partition.widths
    s = {(i, j): float(np.sum(alpha**i * w**j)) for i, j in orders}
    return MomentSet(alpha, s)


def moments_from_params(partition: Partition, params: MixtureParams | None,
                        orders=DEFAULT_ORDERS) -> MomentSet:
    """Moments of the mixture via exact cdf differences (None = uniform)."""
    if params is None:
        alpha = partition.widths.copy()
    else:
        alpha = np.diff(mixture_cdf(partition.breakpoints, params))
    return moments_from_probs(partition, alpha, orders)


def moments_from_density(partition: Partition, g: Callable[[float], float],
                         orders=DEFAULT_ORDERS) -> MomentSet:
    """Moments of an arbitrary density via adaptive quadrature per cell."""
    alpha = np.empty(partition.n_cells)
    bps = partition.breakpoints
    for k in range(partition.n_cells):
        res = quad(g, bps[k], bps[k + 1], epsabs=1e-10, limit=200, full_output=1)
        if len(res) > 3:
            raise ArithmeticError(
                f"quadrature did not converge on [{bps[k]}, {bps[k + 1]}]: {res[3]}")
        alpha[k] = res[0]
    return moments_from_probs(partition, alpha, orders)


def technical_condition(ms: MomentSet) -> bool:
    """Nondegeneracy of the moments behind the p-selection risk expansion.

    Both expressions must be nonzero (|.| > 1e-12):
        8 s11 s21 - 2 s11^2 + 8 s32 - 10 s21^2 - 4 s22
        s21 - s22 - s32 + 3 s11
    """
    try:
        s11, s21 = ms.s[(1, 1)], ms.s[(2, 1)]
        s22, s32 = ms.s[(2, 2)], ms.s[(3, 2)]
    except KeyError as exc:
        raise ValueError(f"moment {exc} missing from MomentSet") from exc
    expr1 = 8.0 * s11 * s21 - 2.0 * s11 * s11 + 8.0 * s32 - 10.0 * s21 * s21 - 4.0 * s22
    expr2 = s21 - s22 - s32 + 3.0 * s11
    return abs(expr1) > 1e-12 and abs(expr2) > 1e-12


def is_subdivision(finer: Partition, coarser: Partition) -> bool:
    """True iff every breakpoint of ``coarser`` is a breakpoint of ``finer``."""
    pos = np.searchsorted(finer.breakpoints, coarser.breakpoints)
    pos = np.clip(pos, 0, finer.breakpoints.size - 1)
    left = np.abs(finer.breakpoints[pos] - coarser.breakpoints) <= _BP_TOL
    right = np.abs(finer.breakpoints[np.maximum(pos - 1, 0)] - coarser.breakpoints) <= _BP_TOL
    return bool(np.all(left | right))


def projection_bias(partition: Partition,
                    density: MixtureParams | Callable[[float], float] | None) -> float:
    """Squared L2 distance between a density and its piecewise-constant projection.

    Equals ||g||^2 - s21.  ``density`` may be MixtureParams (closed form),
    a callable (quadrature), or None for the uniform density (bias 0).
    """
    from .model import l2_norm_squared  # local import to keep module load light

    if density is None:
        return 0.0
    if isinstance(density, MixtureParams):
        ms = moments_from_params(partition, density, orders={(2, 1)})
        norm2 = l2_norm_squared(density)
    else:
        ms = moments_from_density(partition, density, orders={(2, 1)})
        res = quad(lambda x: density(x) ** 2, 0.0, 1.0, epsabs=1e-10, limit=200, full_output=1)
        if len(res) > 3:
            raise ArithmeticError(f"quadrature of the squared density failed: {res[3]}")
        norm2 = res[0]
    return max(norm2 - ms.s[(2, 1)], 0.0)
