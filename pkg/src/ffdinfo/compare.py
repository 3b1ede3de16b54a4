"""Fisher information of the stratified design (I1 = s ell_n / theta) versus
the pooled design (I2 = ell_ns / theta), and the sufficient conditions that
guarantee one ordering or the other.

Condition tags
--------------
T1_case1     theta >= 2, s >= 2, n > 1 + (floor(theta) - 1 + 1/s) / ell_floor(theta)
T1_case2     theta < 2,  s >= 2, n > 1 + (theta + 1)^2 (1/s + 1)
Corollary    theta <= 1, n >= 8, s >= 2
T2           n, s >= 2, 1 <= theta <= sqrt(s / log(1 + ns)) - 1
T2_loosened  n, s >= 2, 1 <= theta <= sqrt(s / log(1 + ns/theta)) - 1
T2_direct    s >= 2, ell_n > log(s)/(s+1) - n theta / ((n+1+theta)(ns+1+theta))
T3           s >= 2, theta^2 > (n-1)(ns+n-1)

T3 guarantees I2 > I1; every other tag guarantees I1 > I2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .ffd import aux_sums, check_theta, ell_prefix
from .sampling import DesignParams

EQUAL_RTOL = 1e-12

CSV_HEADER = ("n", "s", "theta", "i1", "i2", "g", "relation", "fired", "guarantee")


class Relation(str, Enum):
    I1_GREATER = "I1_greater"
    I2_GREATER = "I2_greater"
    EQUAL = "equal"


class Guarantee(str, Enum):
    I1_GREATER = "I1_greater"
    I2_GREATER = "I2_greater"
    NONE = "none"
    CONFLICT = "conflict"  # only reported by scans; verdict() raises instead


#: Reference values of the T1 threshold quantity (without the leading 1), keyed by (theta, s).
REFERENCE_TABLE1 = {
    (2, 2): 13.50, (3, 2): 17.54, (4, 2): 22.32, (5, 2): 27.30, (10, 2): 52.83, (100, 2): 518.53,
    (2, 3): 12.00, (3, 3): 16.37, (4, 3): 21.26, (5, 3): 26.29, (10, 3): 51.90, (100, 3): 517.66,
    (2, 10): 9.90, (3, 10): 14.74, (4, 10): 19.77, (5, 10): 24.87, (10, 10): 50.61, (100, 10): 516.44,
}
TABLE1_THETAS = (2, 3, 4, 5, 10, 100)
TABLE1_S = (2, 3, 10)


class Condition(str, Enum):
    T1_CASE1 = "T1_case1"
    T1_CASE2 = "T1_case2"
    COROLLARY = "Corollary"
    T2 = "T2"
    T2_LOOSENED = "T2_loosened"
    T2_DIRECT = "T2_direct"
    T3 = "T3"

    @property
    def direction(self) -> Guarantee:
        return Guarantee.I2_GREATER if self is Condition.T3 else Guarantee.I1_GREATER


class InconsistentVerdictError(RuntimeError):
    """Conditions guaranteeing opposite orderings fired on one triple."""


@dataclass(frozen=True)
class InfoComparison:
    params: DesignParams
    i1: float
    i2: float
    g: float
    relation: Relation


@dataclass(frozen=True)
class TheoremVerdict:
    fired: frozenset[Condition]
    guarantee: Guarantee

    @property
    def tags(self) -> str:
        return "+".join(c.value for c in Condition if c in self.fired)


@dataclass(frozen=True)
class Table1Value:
    theta: float
    s: int
    with_one: float
    without_one: float


def classify(s_ell_n: float, ell_ns: float, rtol: float = EQUAL_RTOL) -> tuple[float, Relation]:
    g = s_ell_n - ell_ns
    if abs(g) <= rtol * (abs(s_ell_n) + abs(ell_ns)):
        return g, Relation.EQUAL
    return g, Relation.I1_GREATER if g > 0 else Relation.I2_GREATER


def _comparison(params: DesignParams, ell_n: float, ell_ns: float,
                rtol: float = EQUAL_RTOL) -> InfoComparison:
    s_ell_n = params.s * ell_n
    g, rel = classify(s_ell_n, ell_ns, rtol)
    return InfoComparison(params, s_ell_n / params.theta, ell_ns / params.theta, g, rel)


def compare(params: DesignParams, rtol: float = EQUAL_RTOL) -> InfoComparison:
    ell_n = aux_sums(params.n, params.theta).ell
    ell_ns = aux_sums(params.ns, params.theta).ell
    return _comparison(params, ell_n, ell_ns, rtol)


# -- individual conditions, in terms of precomputed ell values ---------------

def _theorem1(n: int, s: int, theta: float, ell_floor: float | None) -> Condition | None:
    if s < 2:
        return None
    if theta >= 2:
        f = math.floor(theta)
        if n > 1 + (f - 1 + 1 / s) / ell_floor:
            return Condition.T1_CASE1
        return None
    if n > 1 + (theta + 1) ** 2 * (1 / s + 1):
        return Condition.T1_CASE2
    return None


def _corollary(n: int, s: int, theta: float) -> bool:
    return theta <= 1 and n >= 8 and s >= 2


def _theorem2(n: int, s: int, theta: float, loosened: bool = False) -> bool:
    if n < 2 or s < 2 or theta < 1:
        return False
    log_term = math.log1p(n * s / theta) if loosened else math.log1p(n * s)
    return theta <= math.sqrt(s / log_term) - 1


def _theorem2_direct(n: int, s: int, theta: float, ell_n: float) -> bool:
    if s < 2:
        return False
    bound = math.log(s) / (s + 1) - n * theta / ((n + 1 + theta) * (n * s + 1 + theta))
    return ell_n > bound


def _theorem3(n: int, s: int, theta: float) -> bool:
    return s >= 2 and theta * theta > (n - 1) * (n * s + n - 1)


def _fired(n: int, s: int, theta: float, ell_n: float, ell_floor: float | None) -> frozenset[Condition]:
    fired = set()
    t1 = _theorem1(n, s, theta, ell_floor)
    if t1 is not None:
        fired.add(t1)
    if _corollary(n, s, theta):
        fired.add(Condition.COROLLARY)
    if _theorem2(n, s, theta):
        fired.add(Condition.T2)
    if _theorem2(n, s, theta, loosened=True):
        fired.add(Condition.T2_LOOSENED)
    if _theorem2_direct(n, s, theta, ell_n):
        fired.add(Condition.T2_DIRECT)
    if _theorem3(n, s, theta):
        fired.add(Condition.T3)
    return frozenset(fired)


def _guarantee(fired: Iterable[Condition]) -> Guarantee:
    directions = {c.direction for c in fired}
    if not directions:
        return Guarantee.NONE
    if len(directions) > 1:
        return Guarantee.CONFLICT
    return directions.pop()


def _ell_floor(theta: float) -> float | None:
    return aux_sums(math.floor(theta), theta).ell if theta >= 2 else None


# -- public checkers ----------------------------------------------------------

def check_theorem1(params: DesignParams) -> bool:
    return _theorem1(params.n, params.s, params.theta, _ell_floor(params.theta)) is not None


def check_corollary(params: DesignParams) -> bool:
    return _corollary(params.n, params.s, params.theta)


def check_theorem2(params: DesignParams) -> bool:
    return _theorem2(params.n, params.s, params.theta)


def check_theorem2_loosened(params: DesignParams) -> bool:
    return _theorem2(params.n, params.s, params.theta, loosened=True)


def check_theorem2_direct(params: DesignParams) -> bool:
    return _theorem2_direct(params.n, params.s, params.theta, aux_sums(params.n, params.theta).ell)


def check_theorem3(params: DesignParams) -> bool:
    return _theorem3(params.n, params.s, params.theta)


def table1_quantity(theta: float, s: int) -> Table1Value:
    """1 + (floor(theta) - 1 + 1/s) / ell_floor(theta), with and without the leading 1."""
    theta = check_theta(theta)
    if theta < 2:
        raise ValueError(f"table1_quantity needs theta >= 2, got {theta}")
    if s < 2:
        raise ValueError(f"table1_quantity needs s >= 2, got {s}")
    f = math.floor(theta)
    without = (f - 1 + 1 / s) / aux_sums(f, theta).ell
    return Table1Value(theta, s, 1 + without, without)


def verdict(params: DesignParams) -> TheoremVerdict:
    """Run every checker; raise if opposite orderings are both guaranteed."""
    fired = _fired(params.n, params.s, params.theta,
                   aux_sums(params.n, params.theta).ell, _ell_floor(params.theta))
    guarantee = _guarantee(fired)
    if guarantee is Guarantee.CONFLICT:
        raise InconsistentVerdictError(
            f"opposite guarantees at {params}: {sorted(c.value for c in fired)}")
    return TheoremVerdict(fired, guarantee)


# -- scans --------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ScanRow:
    comparison: InfoComparison
    verdict: TheoremVerdict

    @property
    def params(self) -> DesignParams:
        return self.comparison.params

    @property
    def contradictions(self) -> frozenset[Condition]:
        """Fired conditions whose guaranteed ordering disagrees with the exact sign of g."""
        rel = self.comparison.relation.value
        return frozenset(c for c in self.verdict.fired if c.direction.value != rel)


def grid_scan(
    n_values: Sequence[int], s_values: Sequence[int], thetas: Sequence[float],
    rtol: float = EQUAL_RTOL,
) -> Iterator[ScanRow]:
    """One row per (n, s, theta), n-major then s then theta.

    ell values come from a shared compensated prefix table per theta, so
    the whole scan costs O(|thetas| * max(n) * max(s)) sums.
    """
    n_values = [int(n) for n in n_values]
    s_values = [int(s) for s in s_values]
    thetas = [check_theta(t) for t in thetas]
    if not (n_values and s_values and thetas):
        return
    m_max = max(max(n_values) * max(s_values), max(math.floor(t) for t in thetas), 1)
    table = ell_prefix(m_max, thetas)
    floors = [float(table[k, math.floor(t)]) if t >= 2 else None for k, t in enumerate(thetas)]
    for n in n_values:
        for s in s_values:
            ns = n * s
            for k, theta in enumerate(thetas):
                params = DesignParams(n, s, theta)
                ell_n = float(table[k, n])
                cmp_ = _comparison(params, ell_n, float(table[k, ns]), rtol)
                fired = _fired(n, s, theta, ell_n, floors[k])
                yield ScanRow(cmp_, TheoremVerdict(fired, _guarantee(fired)))


def fmt_float(x: float) -> str:
    return f"{x:.12g}"


def scan_csv_row(row: ScanRow) -> list[str]:
    c, v = row.comparison, row.verdict
    p = c.params
    return [str(p.n), str(p.s), fmt_float(p.theta), fmt_float(c.i1), fmt_float(c.i2),
            fmt_float(c.g), c.relation.value, v.tags, v.guarantee.value]


@dataclass
class ScanSummary:
    rows: int = 0
    fired_rows: int = 0
    conflicts: int = 0
    contradictions: int = 0
    by_condition: dict | None = None

    def __post_init__(self):
        if self.by_condition is None:
            self.by_condition = {c: 0 for c in Condition}


def write_scan_csv(rows: Iterable[ScanRow], out: TextIO) -> ScanSummary:
    """Stream rows to ``out`` as CSV (LF endings) and tally contradictions."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    summary = ScanSummary()
    for row in rows:
        writer.writerow(scan_csv_row(row))
        tally(summary, row)
    return summary


def tally(summary: ScanSummary, row: ScanRow) -> None:
    summary.rows += 1
    if row.verdict.fired:
        summary.fired_rows += 1
    if row.verdict.guarantee is Guarantee.CONFLICT:
        summary.conflicts += 1
    bad = row.contradictions
    if bad:
        summary.contradictions += 1
        for c in bad:
            summary.by_condition[c] += 1


def summarize(rows: Iterable[ScanRow]) -> ScanSummary:
    summary = ScanSummary()
    for row in rows:
        tally(summary, row)
    return summary


def scan_to_string(rows: Iterable[ScanRow]) -> str:
    buf = io.StringIO()
    write_scan_csv(rows, buf)
    return buf.getvalue()


def log_grid(lo: float, hi: float, points: int) -> list[float]:
    """``points`` log-spaced values from ``lo`` to ``hi`` inclusive."""
    if points < 2 or not 0 < lo < hi:
        raise ValueError("log grid needs 0 < lo < hi and at least 2 points")
    return [float(x) for x in np.geomspace(lo, hi, points)]


def sign_crossings(n: int, s: int, thetas: Sequence[float],
                   rtol: float = EQUAL_RTOL) -> list[tuple[float, float]]:
    """Adjacent grid intervals (theta_k, theta_k+1) where the strict sign of g flips."""
    rows = list(grid_scan([n], [s], sorted(thetas), rtol))
    out = []
    prev = None
    for row in rows:
        rel = row.comparison.relation
        if rel is Relation.EQUAL:
            continue
        if prev is not None and rel is not prev[1]:
            out.append((prev[0], row.params.theta))
        prev = (row.params.theta, rel)
    return out
