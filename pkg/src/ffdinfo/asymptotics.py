"""Leading-order forms of s*ell_n(theta) and ell_ns(theta) in six joint limits
of (n, s, theta), and monitored-ratio checks along finite geometric paths.

Regimes (two parameters grow, the third is fixed):

    I     n/theta -> inf, s fixed
    II    n/theta -> 0,   s fixed
    IIIa  s/theta -> inf, n fixed, s / (theta^2 log(s/theta)) -> inf
    IIIb  s/theta -> inf, n fixed, s / (theta^2 log(s/theta)) -> 0
    IIIc  s/theta -> inf, n fixed, s / (theta^2 log(s/theta)) -> K
    IV    s/theta -> c > 0, n fixed
    V     s/theta -> 0,   n fixed
    VI    n, s -> inf,    theta fixed
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, TextIO

from .compare import Relation, compare, fmt_float
from .ffd import aux_sums
from .sampling import DesignParams

RATIO_BAND = 0.05
PATH_POINTS = 11

CSV_HEADER = ("k", "n", "s", "theta", "exact_a1", "approx_a1", "ratio1",
              "exact_a2", "approx_a2", "ratio2")


class RegimeTag(str, Enum):
    I = "I"
    II = "II"
    IIIA = "IIIa"
    IIIB = "IIIb"
    IIIC = "IIIc"
    IV = "IV"
    V = "V"
    VI = "VI"


class Prediction(str, Enum):
    I1_GREATER = "I1_greater"
    I2_GREATER = "I2_greater"
    CASE_BY_CASE = "case_by_case"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    K: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "tag", RegimeTag(self.tag))
        if (self.tag is RegimeTag.IIIC) != (self.K is not None):
            raise ValueError("K must be given for regime IIIc and only there")
        if self.K is not None and not (math.isfinite(self.K) and self.K > 0):
            raise ValueError(f"K must be finite and > 0, got {self.K}")


def _log(x: float) -> float:
    if x <= 0:
        raise ValueError(f"log of non-positive argument {x}")
    return math.log(x)


def approx_values(params: DesignParams, regime: Regime) -> tuple[float, float]:
    """Leading-order (s*ell_n, ell_ns) for ``regime`` evaluated at finite ``params``."""
    n, s, th = params.n, params.s, params.theta
    tag = regime.tag
    quad1 = n * n * s / (2 * th * th)
    if tag is RegimeTag.I:
        a = _log(n / th)
        return s * a, a
    if tag in (RegimeTag.II, RegimeTag.V):
        return quad1, (n * s) ** 2 / (2 * th * th)
    if tag in (RegimeTag.IIIA, RegimeTag.IIIB):
        return quad1, _log(s / th)
    if tag is RegimeTag.IIIC:
        a = _log(th)
        return n * n * regime.K / 2 * a, a
    if tag is RegimeTag.IV:
        return quad1, aux_sums(params.ns, th).ell
    return s * _log(n), _log(n * s)


def predicted_relation(regime: Regime, n: int | None = None) -> Prediction:
    """Ordering of I1 and I2 in the limit; regime IIIc compares K with 2/n^2."""
    tag = regime.tag
    if tag in (RegimeTag.I, RegimeTag.VI, RegimeTag.IIIA):
        return Prediction.I1_GREATER
    if tag in (RegimeTag.II, RegimeTag.IV, RegimeTag.V, RegimeTag.IIIB):
        return Prediction.I2_GREATER
    if n is None:
        raise ValueError("regime IIIc needs n")
    threshold = 2.0 / (n * n)
    if regime.K > threshold:
        return Prediction.I1_GREATER
    if regime.K < threshold:
        return Prediction.I2_GREATER
    return Prediction.CASE_BY_CASE


def regime_iv_lower_bound(params: DesignParams) -> float:
    """ns(ns-1)/(2 theta^2) / (1 + ns/theta)^2, a strict lower bound on ell_ns."""
    m, th = params.ns, params.theta
    return m * (m - 1) / (2 * th * th) / (1 + m / th) ** 2


@dataclass(frozen=True)
class ConvergenceRow:
    k: int
    params: DesignParams
    exact_a1: float
    approx_a1: float
    exact_a2: float
    approx_a2: float

    @property
    def ratio1(self) -> float:
        return self.exact_a1 / self.approx_a1

    @property
    def ratio2(self) -> float:
        return self.exact_a2 / self.approx_a2


@dataclass(frozen=True)
class ConvergenceReport:
    regime: Regime
    rows: tuple[ConvergenceRow, ...]
    band: float
    final_relation: Relation

    @property
    def final(self) -> ConvergenceRow:
        return self.rows[-1]

    @property
    def ratio1_ok(self) -> bool:
        return abs(self.final.ratio1 - 1) <= self.band

    @property
    def ratio2_ok(self) -> bool:
        if self.regime.tag is RegimeTag.IV:
            return all(r.exact_a2 > regime_iv_lower_bound(r.params) for r in self.rows)
        return abs(self.final.ratio2 - 1) <= self.band

    @property
    def prediction(self) -> Prediction:
        return predicted_relation(self.regime, self.final.params.n)

    @property
    def relation_ok(self) -> bool:
        pred = self.prediction
        return pred is Prediction.CASE_BY_CASE or pred.value == self.final_relation.value

    @property
    def passed(self) -> bool:
        return self.ratio1_ok and self.ratio2_ok and self.relation_ok


def convergence_check(
    regime: Regime, path: Sequence[DesignParams], band: float = RATIO_BAND,
    ks: Sequence[int] | None = None,
) -> ConvergenceReport:
    """Exact versus leading-order values at each path point."""
    if not path:
        raise ValueError("empty path")
    ks = list(ks) if ks is not None else list(range(len(path)))
    rows = []
    for k, p in zip(ks, path):
        a1, a2 = approx_values(p, regime)
        rows.append(ConvergenceRow(
            k, p, p.s * aux_sums(p.n, p.theta).ell, a1, aux_sums(p.ns, p.theta).ell, a2))
    return ConvergenceReport(regime, tuple(rows), band, compare(path[-1]).relation)


def _solve_iiic_s(K: float, theta: float) -> int:
    # s = K theta^2 log(s/theta), by fixed-point iteration from s = K theta^3
    s = K * theta ** 3
    for _ in range(100):
        s = K * theta * theta * math.log(s / theta)
    return int(round(s))


def default_path(regime: Regime, n: int = 3, points: int = PATH_POINTS) -> tuple[list[int], list[DesignParams]]:
    """A geometric path moving along ``regime``'s limit; ``n`` is used where n is fixed.

    Returns (ks, params).  The paths are long because several of the
    approximations converge only at rate 1/log.
    """
    tag = regime.tag
    if tag is RegimeTag.I:
        ks = list(range(10, 10 + points))
        return ks, [DesignParams(4 ** k, 2, 1.0) for k in ks]
    if tag is RegimeTag.II:
        ks = list(range(5, 5 + points))
        return ks, [DesignParams(2 ** k, 3, 4.0 ** k) for k in ks]
    if tag is RegimeTag.IIIA:
        ks = list(range(4, 4 + points))
        return ks, [DesignParams(n, 8 ** k, 2.0 ** k) for k in ks]
    if tag is RegimeTag.IIIB:
        ks = list(range(4, 4 + points))
        return ks, [DesignParams(n, 8 ** k, 4.0 ** k) for k in ks]
    if tag is RegimeTag.IIIC:
        ks = [20 + 18 * i for i in range(points)]
        return ks, [DesignParams(n, _solve_iiic_s(regime.K, 2.0 ** k), 2.0 ** k) for k in ks]
    if tag is RegimeTag.IV:
        ks = list(range(4, 4 + points))
        return ks, [DesignParams(n, 2 ** k, 2.0 ** k) for k in ks]
    if tag is RegimeTag.V:
        ks = list(range(4, 4 + points))
        return ks, [DesignParams(n, 2 ** k, 4.0 ** k) for k in ks]
    ks = [24 + 2 * i for i in range(points)]
    return ks, [DesignParams(2 ** k, 2 ** k, 1.0) for k in ks]


def write_convergence_csv(report: ConvergenceReport, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in report.rows:
        p = r.params
        writer.writerow([r.k, p.n, p.s, fmt_float(p.theta),
                         fmt_float(r.exact_a1), fmt_float(r.approx_a1), fmt_float(r.ratio1),
                         fmt_float(r.exact_a2), fmt_float(r.approx_a2), fmt_float(r.ratio2)])
