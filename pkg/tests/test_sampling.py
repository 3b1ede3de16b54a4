import numpy as np
import pytest
from scipy import stats

from ffdinfo.clt import total_pmf
from ffdinfo.ffd import FfdSpec, pmf_stirling
from ffdinfo.sampling import (
    TASK_SIZE,
    DesignParams,
    counts_histogram,
    draw_block_count,
    draw_crp_partition,
    draw_sample_i,
    draw_sample_ii,
    draw_totals,
    make_rng,
    parallel_map,
    resolve_threads,
    simulate_totals,
    task_sizes,
)


def chi2_pvalue(observed, probs, min_expected=5.0):
    """Pearson test after pooling cells with small expectation into neighbours."""
    expected = probs * observed.sum()
    obs_b, exp_b = [], []
    o = e = 0.0
    for oi, ei in zip(observed, expected):
        o, e = o + oi, e + ei
        if e >= min_expected:
            obs_b.append(o)
            exp_b.append(e)
            o = e = 0.0
    if e > 0:
        obs_b[-1] += o
        exp_b[-1] += e
    exp_b = np.array(exp_b) * (sum(obs_b) / sum(exp_b))
    return stats.chisquare(obs_b, exp_b).pvalue


@pytest.mark.parametrize("m,theta", [(10, 0.5), (30, 3.0), (100, 20.0)])
def test_block_counts_follow_ffd(m, theta):
    rng = make_rng(11, 0)
    draws = [draw_block_count(m, theta, rng) for _ in range(20_000)]
    probs = pmf_stirling(FfdSpec(m, theta)).probs
    assert chi2_pvalue(counts_histogram(draws, m), probs) > 1e-3


def test_vectorized_totals_follow_convolution():
    params = DesignParams(6, 3, 1.7)
    totals = draw_totals(6, 1.7, 3, 50_000, make_rng(3, 0))
    assert totals.min() >= 3 and totals.max() <= 18
    hist = np.bincount(totals - 3, minlength=16)
    assert chi2_pvalue(hist, total_pmf(params)) > 1e-3


def test_crp_partition_shape_and_counts():
    rng = make_rng(5, 0)
    m, theta = 25, 2.0
    parts = [draw_crp_partition(m, theta, rng) for _ in range(10_000)]
    assert all(p.size == m for p in parts)
    assert all(list(p.block_sizes) == sorted(p.block_sizes, reverse=True) for p in parts)
    hist = counts_histogram([p.num_blocks for p in parts], m)
    assert chi2_pvalue(hist, pmf_stirling(FfdSpec(m, theta)).probs) > 1e-3


def test_crp_singletons_match_ewens_expectation():
    # under ESF(m, theta) the expected number of singletons is m theta / (theta + m - 1)
    rng = make_rng(9, 0)
    m, theta = 12, 3.0
    ones = [sum(b == 1 for b in draw_crp_partition(m, theta, rng).block_sizes) for _ in range(20_000)]
    expected = m * theta / (theta + m - 1)
    assert np.mean(ones) == pytest.approx(expected, abs=4 * np.std(ones) / np.sqrt(len(ones)))


def test_sample_shapes():
    rng = make_rng(1, 0)
    params = DesignParams(5, 4, 2.0)
    d1 = draw_sample_i(params, rng)
    assert d1.s == 4 and all(1 <= c <= 5 for c in d1.counts)
    assert d1.mean == d1.total / 4
    assert 1 <= draw_sample_ii(params, rng).count <= 20
    assert draw_sample_i(DesignParams(1, 3, 2.0), rng).counts == (1, 1, 1)
    assert draw_block_count(1, 5.0, rng) == 1


def test_seeded_streams_are_reproducible():
    a = simulate_totals(50, 2.0, 4, 25_000, seed=42)
    b = simulate_totals(50, 2.0, 4, 25_000, seed=42)
    c = simulate_totals(50, 2.0, 4, 25_000, seed=43)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("threads", [2, 3, 8])
def test_thread_count_does_not_change_results(threads):
    one = simulate_totals(40, 1.5, 3, 3 * TASK_SIZE + 17, seed=7, threads=1)
    many = simulate_totals(40, 1.5, 3, 3 * TASK_SIZE + 17, seed=7, threads=threads)
    assert np.array_equal(one, many)


def test_task_sizes():
    assert task_sizes(0) == []
    assert task_sizes(5, 2) == [2, 2, 1]
    assert sum(task_sizes(123_457)) == 123_457


def test_parallel_map_order():
    assert parallel_map(lambda x: x * x, range(10), threads=4) == [x * x for x in range(10)]


def test_resolve_threads(monkeypatch):
    assert resolve_threads(3) == 3
    assert resolve_threads("auto") >= 1
    monkeypatch.setenv("FFDINFO_THREADS", "5")
    assert resolve_threads(None) == 5
    with pytest.raises(ValueError):
        resolve_threads(0)


def test_design_params_validation():
    with pytest.raises(ValueError):
        DesignParams(0, 2, 1.0)
    with pytest.raises(ValueError):
        DesignParams(2, 2, -1.0)
    assert DesignParams(3, 4, 1.0).ns == 12


def test_make_rng_rejects_negative_seed():
    with pytest.raises(ValueError):
        make_rng(-1)
