"""Monte Carlo and exact checks of the normal limit of the stratified total
T = X_1 + ... + X_s, which holds iff s n^2 / theta -> infinity, and of the
pooled count Y, which needs only (ns)^2 / theta -> infinity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy.special import ndtr

from .compare import fmt_float
from .ffd import FfdSpec, aux_sums, log_rising_factorial, pmf_bernoulli_dp
from .sampling import DEFAULT_SEED, DesignParams, simulate_totals

MIN_REPLICATES = 1_000
MGF_SIZE_CAP = 30

CSV_HEADER = ("n", "s", "theta", "replicates", "seed", "condition_value",
              "sigma", "mean_shift", "ks_distance")


@dataclass(frozen=True)
class CltReport:
    params: DesignParams
    statistic: str  # "T" (stratified total) or "Y" (pooled count)
    replicates: int
    seed: int
    sigma: float
    mean_shift: float
    ks_distance: float
    condition_value: float
    # KS against the normal CDF evaluated at lattice midpoints; diagnostic only
    ks_midpoint: float
    sample_mean: float
    sample_variance: float
    center: float


def ks_normal(z: np.ndarray) -> float:
    """sup_x |F_emp(x) - Phi(x)| for the sample ``z``."""
    z = np.sort(np.asarray(z, dtype=np.float64))
    r = z.size
    cdf = ndtr(z)
    upper = np.arange(1, r + 1) / r - cdf
    lower = cdf - np.arange(r) / r
    return float(max(upper.max(), lower.max()))


def _ks_midpoint(values: np.ndarray, center: float, sigma: float) -> float:
    support, counts = np.unique(values, return_counts=True)
    ecdf = np.cumsum(counts) / values.size
    return float(np.abs(ecdf - ndtr((support + 0.5 - center) / sigma)).max())


def _center_scale(m: int, theta: float, s: int) -> tuple[float, float]:
    aux = aux_sums(m, theta)
    return s * theta * aux.L, math.sqrt(s * theta * aux.ell)


def _report(params, statistic, values, replicates, seed, m, s, condition) -> CltReport:
    center, sigma = _center_scale(m, params.theta, s)
    z = (values - center) / sigma
    return CltReport(
        params=params, statistic=statistic, replicates=replicates, seed=seed,
        sigma=sigma, mean_shift=float(z.mean()), ks_distance=ks_normal(z),
        condition_value=condition, ks_midpoint=_ks_midpoint(values, center, sigma),
        sample_mean=float(values.mean()), sample_variance=float(values.var(ddof=1)),
        center=center,
    )


def _check_replicates(replicates: int) -> None:
    if replicates < MIN_REPLICATES:
        raise ValueError(f"need at least {MIN_REPLICATES} replicates, got {replicates}")


def run_clt_experiment(
    params: DesignParams, replicates: int, seed: int = DEFAULT_SEED, threads: int = 1
) -> CltReport:
    """Standardize simulated T by s*theta*L_n and sqrt(s*theta*ell_n)."""
    if params.n < 2:
        raise ValueError("n = 1 makes T = s degenerate")
    _check_replicates(replicates)
    totals = simulate_totals(params.n, params.theta, params.s, replicates, seed, threads)
    condition = params.s * params.n ** 2 / params.theta
    return _report(params, "T", totals, replicates, seed, params.n, params.s, condition)


def run_clt_experiment_y(
    params: DesignParams, replicates: int, seed: int = DEFAULT_SEED, threads: int = 1
) -> CltReport:
    """Same protocol for Y ~ FFD(ns, theta)."""
    if params.ns < 2:
        raise ValueError("ns = 1 makes Y = 1 degenerate")
    _check_replicates(replicates)
    counts = simulate_totals(params.ns, params.theta, 1, replicates, seed, threads)
    condition = params.ns ** 2 / params.theta
    return _report(params, "Y", counts, replicates, seed, params.ns, 1, condition)


def total_pmf(params: DesignParams) -> np.ndarray:
    """Exact law of T on s..ns (index 0 is T = s), by s-fold convolution."""
    base = pmf_bernoulli_dp(FfdSpec(params.n, params.theta)).probs
    out = np.ones(1)
    for _ in range(params.s):
        out = np.convolve(out, base)
    return out


def exact_ks_distance(params: DesignParams, statistic: str = "T") -> float:
    """Population KS distance between standardized T (or Y) and N(0, 1).

    Y needs ns up to the size the log-space DP handles comfortably; T is
    convolved directly and is meant for small n*s.
    """
    if statistic == "T":
        probs = total_pmf(params)
        support = np.arange(params.s, params.ns + 1)
        center, sigma = _center_scale(params.n, params.theta, params.s)
    elif statistic == "Y":
        probs = pmf_bernoulli_dp(FfdSpec(params.ns, params.theta)).probs
        support = np.arange(1, params.ns + 1)
        center, sigma = _center_scale(params.ns, params.theta, 1)
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    cdf_at = np.cumsum(probs)
    cdf_before = cdf_at - probs
    phi = ndtr((support - center) / sigma)
    return float(max(np.abs(cdf_at - phi).max(), np.abs(cdf_before - phi).max()))


@dataclass(frozen=True)
class MgfCheck:
    max_rel_error: float
    min_tv_to_ffd: float
    closest_ffd: tuple[int, float]


def _tv(p_support: Sequence[int], p: np.ndarray, q: np.ndarray) -> float:
    # q is an FFD pmf on 1..len(q); p lives on p_support
    lo = 1
    hi = max(p_support[-1], len(q))
    a = np.zeros(hi - lo + 1)
    b = np.zeros(hi - lo + 1)
    a[np.asarray(p_support) - lo] = p
    b[: len(q)] = q
    return 0.5 * float(np.abs(a - b).sum())


def t_mgf_check(
    params: DesignParams,
    t_grid: Iterable[float],
    theta_grid: Sequence[float] | None = None,
) -> MgfCheck:
    """Compare the convolution mgf of T with ((theta e^t)_n / (theta)_n)^s.

    Also returns the smallest total-variation distance from the law of T
    to FFD(m, theta') over m = 1..ns+2 and a log grid of theta'.
    """
    if params.ns > MGF_SIZE_CAP:
        raise ValueError(f"n*s={params.ns} exceeds the exact-convolution cap {MGF_SIZE_CAP}")
    probs = total_pmf(params)
    support = np.arange(params.s, params.ns + 1)
    worst = 0.0
    for t in t_grid:
        conv = float(np.sum(probs * np.exp(t * support)))
        closed = math.exp(params.s * (log_rising_factorial(params.theta * math.exp(t), params.n)
                                      - log_rising_factorial(params.theta, params.n)))
        worst = max(worst, abs(conv - closed) / abs(closed))
    if theta_grid is None:
        theta_grid = np.geomspace(1e-3, 1e3, 241)
    best = (math.inf, (0, 0.0))
    for m in range(1, params.ns + 3):
        for th in theta_grid:
            q = pmf_bernoulli_dp(FfdSpec(m, float(th))).probs
            d = _tv(list(support), probs, q)
            if d < best[0]:
                best = (d, (m, float(th)))
    return MgfCheck(worst, best[0], best[1])


def write_clt_csv(reports: Iterable[CltReport], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in reports:
        p = r.params
        writer.writerow([p.n, p.s, fmt_float(p.theta), r.replicates, r.seed,
                         fmt_float(r.condition_value), fmt_float(r.sigma),
                         fmt_float(r.mean_shift), fmt_float(r.ks_distance)])
