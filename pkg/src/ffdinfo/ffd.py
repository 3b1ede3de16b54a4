"""Falling factorial distribution FFD(m, theta).

The number of distinct blocks in an Ewens partition of m elements has pmf

    P(X = x) = s(m, x) theta**x / (theta)_m,    x = 1..m,

where s(m, x) are unsigned Stirling numbers of the first kind and
(theta)_m is the rising factorial.  Two independent routes to the pmf are
provided: the Stirling recurrence and a Bernoulli-sum dynamic program
(X = 1 + sum_{j=2}^m Bernoulli(theta / (theta + j - 1))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy.special import digamma, gammaln, polygamma

#: Above this size, L_m and ell_m use digamma/trigamma closed forms and
#: the rising factorial uses log-gamma differences.
CLOSED_FORM_THRESHOLD = 10**6

#: Default largest m for which the Stirling table may be built.
STIRLING_CAP = 10**4


def check_size(m, name: str = "m") -> int:
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)):
        raise TypeError(f"{name} must be an integer, got {type(m).__name__}")
    if m < 1:
        raise ValueError(f"{name} must be >= 1, got {m}")
    return int(m)


def check_theta(theta) -> float:
    theta = float(theta)
    if not math.isfinite(theta) or theta <= 0.0:
        raise ValueError(f"theta must be finite and > 0, got {theta}")
    return theta


@dataclass(frozen=True)
class FfdSpec:
    """Falling factorial distribution with sample size ``m`` and diversity ``theta``."""

    m: int
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "m", check_size(self.m))
        object.__setattr__(self, "theta", check_theta(self.theta))

    @property
    def support(self) -> np.ndarray:
        return np.arange(1, self.m + 1)


@dataclass(frozen=True)
class AuxSums:
    """L_m(theta) = sum 1/(theta+i-1) and ell_m(theta) = sum (i-1)/(theta+i-1)^2."""

    L: float
    ell: float


@dataclass(frozen=True)
class PmfTable:
    spec: FfdSpec
    log_probs: np.ndarray = field(repr=False)

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def prob(self, x: int) -> float:
        if not 1 <= x <= self.spec.m:
            return 0.0
        return float(np.exp(self.log_probs[x - 1]))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)


def aux_sums(m: int, theta: float) -> AuxSums:
    """Return L_m(theta) and ell_m(theta).

    Direct sums are accumulated in ascending order with exact-rounding
    summation (``math.fsum``); beyond ``CLOSED_FORM_THRESHOLD`` terms the
    polygamma identities

        L_m = psi(theta + m) - psi(theta)
        ell_m = L_m - theta * (psi'(theta) - psi'(theta + m))

    are used instead.
    """
    m = check_size(m)
    theta = check_theta(theta)
    if m > CLOSED_FORM_THRESHOLD:
        return _aux_sums_closed_form(m, theta)
    i = np.arange(m, dtype=np.float64)
    d = theta + i
    L = math.fsum(1.0 / d)
    ell = math.fsum(i / (d * d))
    return AuxSums(L=L, ell=ell)


def _aux_sums_closed_form(m: int, theta: float) -> AuxSums:
    L = float(digamma(theta + m) - digamma(theta))
    ell = L - theta * float(polygamma(1, theta) - polygamma(1, theta + m))
    return AuxSums(L=L, ell=ell)


def ell_prefix(m_max: int, thetas) -> np.ndarray:
    """Prefix table ``out[k, m] = ell_m(thetas[k])`` for m = 0..m_max.

    Column 0 is ell_0 = 0.  Accumulation runs in ascending i with
    Neumaier compensation, vectorized across the theta axis; used by the
    grid scans, where per-triple sums would dominate the runtime.
    """
    m_max = check_size(m_max, "m_max")
    th = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    for t in th:
        check_theta(t)
    out = np.zeros((th.size, m_max + 1))
    total = np.zeros(th.size)
    comp = np.zeros(th.size)
    for i in range(1, m_max + 1):
        d = th + (i - 1)
        term = (i - 1) / (d * d)
        t = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - t) + term, (term - t) + total)
        total = t
        out[:, i] = total + comp
    return out


def log_rising_factorial(theta: float, m: int) -> float:
    """log((theta)_m) = sum_{i=0}^{m-1} log(theta + i)."""
    theta = check_theta(theta)
    m = check_size(m)
    if m > CLOSED_FORM_THRESHOLD:
        return float(gammaln(theta + m) - gammaln(theta))
    return math.fsum(np.log(theta + np.arange(m, dtype=np.float64)))


def _log_rising_over_factorial(theta: float, m: int) -> float:
    # log((theta)_m / m!) = sum log1p((theta - 1) / i); terms stay O(1) so the
    # subtraction of two huge logs in the pmf normalizer is avoided.
    if m > CLOSED_FORM_THRESHOLD:
        return float(gammaln(theta + m) - gammaln(theta) - gammaln(m + 1.0))
    i = np.arange(1, m + 1, dtype=np.float64)
    return math.fsum(np.log1p((theta - 1.0) / i))


def _log_mass(log_p: np.ndarray) -> float:
    top = float(log_p.max())
    return top + math.log(math.fsum(np.exp(log_p - top)))


def _renormalize(log_p: np.ndarray) -> np.ndarray:
    # x log(theta) and log (theta)_m reach the thousands for large m*theta, so
    # their difference carries ~1e-13 absolute error; remove the residual mass.
    return log_p - _log_mass(log_p)


def scaled_stirling_rows(m: int) -> Iterator[np.ndarray]:
    """Yield ``log(s(k, x) / k!)`` for x = 1..k, successively for k = 1..m.

    The scaled entries are the FFD(k, 1) probabilities, so every row stays
    in [0, 1] and rounding does not grow with log(k!).  Recurrence:

        s(k+1, x) = s(k, x-1) + k s(k, x),   s(1, 1) = 1.
    """
    m = check_size(m)
    row = np.zeros(1)
    yield row
    for k in range(1, m):
        logk = math.log(k)
        nxt = np.empty(k + 1)
        nxt[0] = row[0] + logk
        nxt[k] = row[k - 1]
        if k > 1:
            nxt[1:k] = np.logaddexp(row[:-1], row[1:] + logk)
        nxt -= math.log(k + 1)
        row = nxt
        yield row


def stirling_log_table(m: int, cap: int = STIRLING_CAP) -> list[np.ndarray]:
    """Triangular table: ``table[k-1][x-1] = log s(k, x)`` for 1 <= x <= k <= m."""
    m = check_size(m)
    if m > cap:
        raise ValueError(f"m={m} exceeds the Stirling table cap {cap}")
    return [row + gammaln(k + 1.0) for k, row in enumerate(scaled_stirling_rows(m), start=1)]


def _pmf_from_scaled_row(spec: FfdSpec, row: np.ndarray) -> PmfTable:
    x = np.arange(1, spec.m + 1, dtype=np.float64)
    log_probs = row + x * math.log(spec.theta) - _log_rising_over_factorial(spec.theta, spec.m)
    return PmfTable(spec, _renormalize(log_probs))


def pmf_stirling(spec: FfdSpec, cap: int = STIRLING_CAP) -> PmfTable:
    """pmf via log Stirling numbers: log s(m,x) + x log theta - log (theta)_m."""
    if spec.m > cap:
        raise ValueError(f"m={spec.m} exceeds the Stirling table cap {cap}")
    for row in scaled_stirling_rows(spec.m):
        pass
    return _pmf_from_scaled_row(spec, row)


def iter_pmf_stirling(m_max: int, theta: float, cap: int = STIRLING_CAP) -> Iterator[PmfTable]:
    """pmf_stirling for every m = 1..m_max in one pass over the recurrence."""
    if m_max > cap:
        raise ValueError(f"m={m_max} exceeds the Stirling table cap {cap}")
    theta = check_theta(theta)
    log_theta = math.log(theta)
    # running log((theta)_m / m!) with Neumaier compensation
    total = comp = 0.0
    for m, row in enumerate(scaled_stirling_rows(m_max), start=1):
        term = math.log1p((theta - 1.0) / m)
        t = total + term
        comp += (total - t) + term if abs(total) >= abs(term) else (term - t) + total
        total = t
        x = np.arange(1, m + 1, dtype=np.float64)
        yield PmfTable(FfdSpec(m, theta), _renormalize(row + x * log_theta - (total + comp)))


def pmf_bernoulli_dp(spec: FfdSpec) -> PmfTable:
    """pmf of 1 + sum_{j=2}^m Bernoulli(theta/(theta+j-1)) by sequential convolution.

    Runs in log space so far tails stay finite.
    """
    theta = spec.theta
    log_theta = math.log(theta)
    lp = np.zeros(1)
    for j in range(2, spec.m + 1):
        log_den = math.log(theta + j - 1)
        log_hit = log_theta - log_den
        log_miss = math.log(j - 1) - log_den
        nxt = np.empty(lp.size + 1)
        nxt[0] = lp[0] + log_miss
        nxt[-1] = lp[-1] + log_hit
        if lp.size > 1:
            nxt[1:-1] = np.logaddexp(lp[1:] + log_miss, lp[:-1] + log_hit)
        lp = nxt
    return PmfTable(spec, lp)


def moments(spec: FfdSpec) -> tuple[float, float]:
    """Mean theta*L_m(theta) and variance theta*ell_m(theta)."""
    aux = aux_sums(spec.m, spec.theta)
    return spec.theta * aux.L, spec.theta * aux.ell


def mgf(spec: FfdSpec, t: float) -> float:
    """E[exp(tX)] = (theta e^t)_m / (theta)_m."""
    return math.exp(log_rising_factorial(spec.theta * math.exp(t), spec.m)
                    - log_rising_factorial(spec.theta, spec.m))
