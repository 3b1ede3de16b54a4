"""Random generation for the stratified (s samples of n) and pooled (one
sample of ns) designs.

Block counts are drawn exactly as 1 + sum_{j=2}^m Bernoulli(theta/(theta+j-1)).
Streams are Philox counter-based generators keyed by (seed, task), so a
Monte Carlo run partitioned into fixed-size tasks gives the same numbers
whatever the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .ffd import check_size, check_theta

#: Master seed used whenever the caller does not supply one.
DEFAULT_SEED = 20190523

#: Replicates per independent stream in parallel Monte Carlo.
TASK_SIZE = 10_000

# Upper bound on the Bernoulli matrix materialized per chunk.
_CHUNK_ELEMENTS = 4_000_000

THREADS_ENV = "FFDINFO_THREADS"

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class DesignParams:
    """Per-sample size ``n``, number of samples ``s`` and diversity ``theta``."""

    n: int
    s: int
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "n", check_size(self.n, "n"))
        object.__setattr__(self, "s", check_size(self.s, "s"))
        object.__setattr__(self, "theta", check_theta(self.theta))

    @property
    def ns(self) -> int:
        return self.n * self.s


@dataclass(frozen=True)
class SampleIDraw:
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def s(self) -> int:
        return len(self.counts)

    @property
    def mean(self) -> float:
        return self.total / self.s


@dataclass(frozen=True)
class SampleIIDraw:
    count: int


@dataclass(frozen=True)
class Partition:
    block_sizes: tuple[int, ...]

    @property
    def size(self) -> int:
        return sum(self.block_sizes)

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)


def make_rng(seed: int = DEFAULT_SEED, task: int = 0) -> np.random.Generator:
    """Philox stream for task ``task`` of master seed ``seed``."""
    if seed < 0 or task < 0:
        raise ValueError("seed and task must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, task])))


def resolve_threads(threads: int | str | None) -> int:
    if threads is None:
        threads = os.environ.get(THREADS_ENV, "1")
    if threads == "auto":
        return os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """``list(map(fn, items))``, optionally on a thread pool; order is preserved."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _success_probs(m: int, theta: float) -> np.ndarray:
    j = np.arange(2, m + 1, dtype=np.float64)
    return theta / (theta + j - 1.0)


def draw_block_count(m: int, theta: float, rng: np.random.Generator) -> int:
    """One exact draw from FFD(m, theta)."""
    m = check_size(m)
    theta = check_theta(theta)
    if m == 1:
        return 1
    return 1 + int(np.count_nonzero(rng.random(m - 1) < _success_probs(m, theta)))


def draw_totals(m: int, theta: float, s: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` draws of the sum of ``s`` iid FFD(m, theta) variables.

    The j-th Bernoulli of every sample shares one success probability, so
    the total is s + sum_j Binomial(s, p_j) -- exact, with m-1 binomials
    per replicate instead of s*(m-1) Bernoullis.  With s = 1 this is a
    vectorized ``draw_block_count``.
    """
    m = check_size(m)
    s = check_size(s, "s")
    theta = check_theta(theta)
    out = np.full(size, s, dtype=np.int64)
    if m == 1 or size == 0:
        return out
    p = _success_probs(m, theta)
    rows = max(1, _CHUNK_ELEMENTS // p.size)
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        out[start:stop] += rng.binomial(s, np.broadcast_to(p, (stop - start, p.size))).sum(axis=1)
    return out


def draw_sample_i(params: DesignParams, rng: np.random.Generator) -> SampleIDraw:
    """s independent FFD(n, theta) block counts."""
    if params.n == 1:
        return SampleIDraw((1,) * params.s)
    hits = rng.random((params.s, params.n - 1)) < _success_probs(params.n, params.theta)
    return SampleIDraw(tuple(int(c) for c in 1 + hits.sum(axis=1)))


def draw_sample_ii(params: DesignParams, rng: np.random.Generator) -> SampleIIDraw:
    return SampleIIDraw(draw_block_count(params.ns, params.theta, rng))


def draw_crp_partition(m: int, theta: float, rng: np.random.Generator) -> Partition:
    """Chinese restaurant process: element j+1 opens a new block w.p. theta/(theta+j)."""
    m = check_size(m)
    theta = check_theta(theta)
    sizes: list[int] = []
    for j in range(m):
        if rng.random() * (theta + j) < theta:
            sizes.append(1)
            continue
        u = rng.random() * j
        acc = 0
        for b, size in enumerate(sizes):
            acc += size
            if u < acc:
                sizes[b] += 1
                break
        else:
            sizes[-1] += 1
    return Partition(tuple(sorted(sizes, reverse=True)))


def task_sizes(replicates: int, task_size: int = TASK_SIZE) -> list[int]:
    """Split ``replicates`` into consecutive fixed-size tasks."""
    full, rest = divmod(replicates, task_size)
    return [task_size] * full + ([rest] if rest else [])


def simulate_totals(
    m: int,
    theta: float,
    s: int,
    replicates: int,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
) -> np.ndarray:
    """Parallel ``draw_totals`` over deterministic per-task streams."""
    sizes = task_sizes(replicates)

    def run(task: int) -> np.ndarray:
        return draw_totals(m, theta, s, sizes[task], make_rng(seed, task))

    parts = parallel_map(run, range(len(sizes)), threads)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def counts_histogram(values: Sequence[int], m: int) -> np.ndarray:
    """Histogram of integer draws over 1..m (index 0 holds value 1)."""
    return np.bincount(np.asarray(values) - 1, minlength=m)[:m]

