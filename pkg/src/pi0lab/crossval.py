"""Leave-p-out risk, its exact MSE under the multinomial law, and the
window-selection estimator.

For a partition I with counts n_k and weights w_k = 1/|I_k|, define

    S1 = (1/n) sum_k w_k n_k,      S2 = (1/n^2) sum_k w_k n_k^2.

The closed-form leave-p-out (LPO) risk estimator is

    R_p(I) = (2n-p)/((n-1)(n-p)) * n*S1... written with integer numerators:
    R_p(I) = [ (2n-p) S1 - n(n-p+1) S2 ] / ((n-1)(n-p)/n ... see lpo_risk.

Its target is R(I) = -s21 + (s11 - s21)/n.  The per-partition holdout size p
is chosen by minimizing the exact mean squared error of R_p under the
multinomial(n, alpha_hat) law, computed from falling-factorial moment
identities (E[prod n_k^(r_k)] = n^(sum r) prod alpha_k^(r_k) over distinct
cells).  The estimator then keeps the partition of smallest selected risk and
returns the observation fraction of its window, scaled by the window width.

Everything here is assembled with integer numerators (exact in double
precision below 2^53) so that the structural identities - the trivial
partition's risk is exactly -1 and its MSE exactly 0 - survive floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .histogram import EstimateResult
from .model import PValueSample
from .partitions import (
    HistogramCounts,
    MomentSet,
    Partition,
    counts_from_sorted,
    enumerate_collection,
    moments_from_probs,
    technical_condition,
)


@dataclass(frozen=True)
class RiskEstimate:
    """Selected LPO risk for one partition."""

    r_hat: float
    p: int
    partition: Partition


@dataclass(frozen=True)
class SelectorTrace:
    """Full record of a selection run."""

    records: list[RiskEstimate]
    condition_ok: list[bool]
    chosen_index: int
    m_hat: int
    lambda_hat: float
    mu_hat: float
    p_hat: int
    r_hat: float


def lpo_risk(counts: HistogramCounts, partition: Partition, p: int) -> float:
    """Closed-form leave-p-out risk estimate for holdout size p."""
    n = counts.n
    if n < 2:
        raise ValueError("need n >= 2")
    if not 1 <= p <= n - 1:
        raise ValueError(f"p must be in [1, {n - 1}], got {p}")
    w = 1.0 / partition.widths
    c = counts.counts.astype(float)
    s1 = float(w @ c) / n
    s2 = float(w @ (c * c)) / (n * n)
    num1 = float(2 * n - p)          # (2n-p) S1 - n(n-p+1) S2, one final division
    num2 = float(n * (n - p + 1))    # keeps the trivial-partition value exactly -1
    denom = float((n - 1) * (n - p))
    return (num1 * s1 - num2 * s2) / denom


def _mse_inputs(ms: MomentSet, n: int):
    """Raw moments of (S1, S2) under multinomial(n, alpha) plus the risk target.

    Returns (a, b, c, d, e, r) = (E[S1^2], E[S1 S2], E[S2^2], E[S1], E[S2], R).
    Falling factorials n_(k) keep integer arithmetic exact below 2^53.
    """
    s11, s21 = ms.s[(1, 1)], ms.s[(2, 1)]
    s12, s22, s32 = ms.s[(1, 2)], ms.s[(2, 2)], ms.s[(3, 2)]
    n2 = float(n) * (n - 1)
    n3 = n2 * (n - 2)
    n4 = n3 * (n - 3)
    nf = float(n)
    a = (n2 * s11 * s11 + nf * s12) / nf**2
    b = (n3 * s11 * s21 + n2 * (s11 * s11 + 2.0 * s22) + nf * s12) / nf**3
    c = (n4 * s21 * s21 + n3 * (2.0 * s11 * s21 + 4.0 * s32)
         + n2 * (s11 * s11 + 6.0 * s22) + nf * s12) / nf**4
    d = s11
    e = (n2 * s21 + nf * s11) / nf**2
    r = -s21 + (s11 - s21) / nf
    return a, b, c, d, e, r


def _mse_at(p, ms: MomentSet, n: int):
    """Exact MSE of R_p at holdout size(s) p; p may be an int or an array."""
    a, b, c, d, e, r = _mse_inputs(ms, n)
    p = np.asarray(p, dtype=float)
    na = 2.0 * n - p
    nb = float(n) * (n - p + 1.0)
    q = float(n - 1) * (n - p)
    mse = ((na * na * a - 2.0 * na * nb * b + nb * nb * c) / (q * q)
           - 2.0 * r * (na * d - nb * e) / q + r * r)
    return np.maximum(mse, 0.0)


def analytic_mse(p: int, partition: Partition, alpha_hat: MomentSet, n: int) -> float:
    """Exact E[(R_p - R)^2] under multinomial(n, alpha_hat); polynomial, >= 0."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not 1 <= p <= n - 1:
        raise ValueError(f"p must be in [1, {n - 1}], got {p}")
    if alpha_hat.alpha.size != partition.n_cells:
        raise ValueError("moment set does not match the partition")
    return float(_mse_at(p, alpha_hat, n))


def select_p(counts: HistogramCounts, partition: Partition) -> int:
    """Exhaustive argmin of the exact MSE over p in {1..n-1}; ties -> smallest p."""
    n = counts.n
    if n < 2:
        raise ValueError("need n >= 2")
    ms = moments_from_probs(partition, counts.counts / n)
    curve = _mse_at(np.arange(1, n), ms, n)
    return 1 + int(np.argmin(curve))


def _argmin_p(ms: MomentSet, n: int) -> int:
    """Argmin of the exact MSE over p in {1..n-1}, via convexity in 1/(n-p).

    In u = 1/(n-p) the MSE is the quadratic c0 + c1 u + c2 u^2 with
    c2 = n^2 (a - 2b + c)/(n-1)^2 and a - 2b + c = E[(S1-S2)^2] >= 0, so the
    discrete minimum sits at a grid point bracketing the vertex.  Candidates
    around the vertex plus both endpoints are evaluated with the same formula
    as the exhaustive sweep, ties resolved to the smallest p, so the result
    matches the exhaustive argmin (property-tested).
    """
    a, b, c, d, e, r = _mse_inputs(ms, n)
    kap = 1.0 / (n - 1)
    c2 = kap * kap * n * n * (a - 2.0 * b + c)
    c1 = kap * kap * (2.0 * n * a - 2.0 * n * (n + 1.0) * b + 2.0 * n * n * c) \
        - 2.0 * r * kap * n * (d - e)
    cands = {1, n - 1}   # endpoints cover the c2 <= 0 and clamped-vertex cases
    if c2 > 0.0:
        u_star = -c1 / (2.0 * c2)
        if u_star > 1.0 / (n - 1):
            p_real = n - 1.0 / min(u_star, 1.0)
            base = int(np.floor(p_real))
            cands.update(pc for pc in range(base - 2, base + 4) if 1 <= pc <= n - 1)
    p_arr = np.array(sorted(cands))
    return int(p_arr[np.argmin(_mse_at(p_arr, ms, n))])


def _resolve_p(p_mode, n: int):
    """Normalize the p_mode argument: 'auto', 'fixed', or an explicit int."""
    if p_mode == "auto":
        return None
    if p_mode == "fixed":
        return min(max(n // 10, 1), n - 1)
    p = int(p_mode)
    if not 1 <= p <= n - 1:
        raise ValueError(f"fixed p must be in [1, {n - 1}], got {p}")
    return p


def theta_hat_cr(sample: PValueSample, m_min: int = 2, m_max: int = 5,
                 right_anchored: bool = False, p_mode="auto") -> EstimateResult:
    """Window-selection estimate of the null proportion.

    For every window partition in the collection, pick its holdout size
    (per-partition exact-MSE argmin, or a fixed p), evaluate the LPO risk,
    and keep the partition of minimal risk - ties broken by widest window,
    then smallest M, then smallest lam.  The estimate is the fraction of
    observations in the chosen closed window over its width.
    """
    n = sample.n
    if n < 2:
        raise ValueError("need n >= 2")
    parts = enumerate_collection(m_min, m_max, right_anchored)
    if not parts:
        raise ValueError(f"empty collection for m in [{m_min}, {m_max}]")
    fixed_p = _resolve_p(p_mode, n)
    vsorted = np.sort(sample.values)
    records, cond_flags = [], []
    best = None
    for i, part in enumerate(parts):
        cnts = counts_from_sorted(vsorted, part)
        ms = moments_from_probs(part, cnts / n)
        p_sel = _argmin_p(ms, n) if fixed_p is None else fixed_p
        r_hat = lpo_risk(HistogramCounts(cnts), part, p_sel)
        records.append(RiskEstimate(r_hat, p_sel, part))
        cond_flags.append(technical_condition(ms))
        m_cells, lam, mu = part.cr_params
        rank = (r_hat, -(mu - lam), m_cells, lam)
        if best is None or rank < best[0]:
            best = (rank, i)
    idx = best[1]
    chosen = records[idx]
    m_cells, lam, mu = chosen.partition.cr_params
    in_window = int(np.searchsorted(vsorted, mu, side="right")
                    - np.searchsorted(vsorted, lam, side="left"))
    theta = in_window / (n * (mu - lam))
    trace = SelectorTrace(records=records, condition_ok=cond_flags, chosen_index=idx,
                          m_hat=m_cells, lambda_hat=lam, mu_hat=mu,
                          p_hat=chosen.p, r_hat=chosen.r_hat)
    return EstimateResult(
        theta_hat=float(theta),
        method="cr",
        trace={"m_hat": m_cells, "lambda_hat": lam, "mu_hat": mu,
               "p_hat": chosen.p, "r_hat": chosen.r_hat, "selector": trace},
    )
