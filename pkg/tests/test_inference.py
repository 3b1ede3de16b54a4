import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from ffdinfo.ffd import FfdSpec, aux_sums, pmf_stirling
from ffdinfo.inference import (
    MLE_CSV_HEADER,
    Design,
    MleStatus,
    asymptotic_stderr,
    expected_blocks,
    fisher_information,
    mle_sample_i,
    mle_sample_ii,
    score_single,
    simulate_mle,
    solve_mean_equation,
    write_mle_csv,
)
from ffdinfo.sampling import DesignParams, SampleIDraw, SampleIIDraw


def test_pooled_example_root():
    res = mle_sample_ii(SampleIIDraw(3), DesignParams(4, 1, 1.0))
    oracle = brentq(lambda t: expected_blocks(t, 4) - 3, 1e-6, 1e6, xtol=1e-14)
    assert res.status is MleStatus.INTERIOR
    assert res.theta_hat == pytest.approx(oracle, abs=1e-8)
    assert res.theta_hat == pytest.approx(3.76644, abs=1e-5)
    assert abs(res.residual) <= 1e-10


def test_stratified_equal_counts_gives_one():
    # counts (2, 1) with n = 2: mean 1.5 = 1 + theta/(theta+1) at theta = 1
    res = mle_sample_i(SampleIDraw((2, 1)), 2)
    assert res.theta_hat == pytest.approx(1.0, abs=1e-9)
    assert res.std_error == pytest.approx(math.sqrt(1.0 / (2 * 0.25)), rel=1e-8)


def test_boundary_estimates():
    lo = mle_sample_i(SampleIDraw((1, 1, 1)), 5)
    assert lo.status is MleStatus.AT_ZERO and lo.theta_hat == 0.0 and lo.std_error is None
    hi = mle_sample_i(SampleIDraw((5, 5)), 5)
    assert hi.status is MleStatus.AT_INFINITY and math.isinf(hi.theta_hat) and hi.std_error is None
    assert mle_sample_ii(SampleIIDraw(1), DesignParams(3, 2, 1.0)).status is MleStatus.AT_ZERO
    assert mle_sample_ii(SampleIIDraw(6), DesignParams(3, 2, 1.0)).status is MleStatus.AT_INFINITY


def test_n1_always_at_zero():
    assert mle_sample_i(SampleIDraw((1, 1)), 1).status is MleStatus.AT_ZERO


def test_data_validation():
    with pytest.raises(ValueError):
        mle_sample_i(SampleIDraw((0, 2)), 3)
    with pytest.raises(ValueError):
        mle_sample_ii(SampleIIDraw(7), DesignParams(3, 2, 1.0))
    with pytest.raises(ValueError):
        score_single(4, 3, 1.0)


def test_stderr_undefined_at_boundary():
    with pytest.raises(ValueError):
        asymptotic_stderr(0.0, DesignParams(3, 2, 1.0), Design.STRATIFIED)
    with pytest.raises(ValueError):
        asymptotic_stderr(math.inf, DesignParams(3, 2, 1.0), "pooled")


@settings(max_examples=80, deadline=None)
@given(m=st.integers(2, 300), s=st.integers(1, 20), data=st.data())
def test_root_solves_mean_equation(m, s, data):
    total = data.draw(st.integers(s + 1, m * s - 1)) if m * s - 1 >= s + 1 else None
    if total is None:
        return
    theta, status, resid = solve_mean_equation(total, s, m)
    assert status is MleStatus.INTERIOR
    assert abs(resid) <= 1e-10
    assert abs(expected_blocks(theta, m) - total / s) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(m=st.integers(2, 60), s=st.integers(1, 5), data=st.data())
def test_root_monotone_in_total(m, s, data):
    a = data.draw(st.integers(s + 1, m * s - 1)) if m * s - 1 > s + 1 else None
    if a is None:
        return
    b = data.draw(st.integers(a + 1, m * s - 1)) if a + 1 <= m * s - 1 else None
    if b is None:
        return
    assert solve_mean_equation(a, s, m)[0] < solve_mean_equation(b, s, m)[0]


@pytest.mark.parametrize("m,theta", [(5, 2.0), (40, 0.3), (200, 17.0)])
def test_score_identities_by_enumeration(m, theta):
    p = pmf_stirling(FfdSpec(m, theta)).probs
    scores = np.array([score_single(x, m, theta) for x in range(1, m + 1)])
    assert abs(math.fsum(p * scores)) < 1e-12
    assert math.fsum(p * scores ** 2) == pytest.approx(aux_sums(m, theta).ell / theta, rel=1e-10)


def test_fisher_information_forms():
    params = DesignParams(7, 2, 3.0)
    assert fisher_information(params, "stratified") == pytest.approx(2 * aux_sums(7, 3.0).ell / 3)
    assert fisher_information(params, "pooled") == pytest.approx(aux_sums(14, 3.0).ell / 3)


@pytest.mark.parametrize("design", list(Design))
def test_simulated_variance_near_inverse_information(design):
    sim = simulate_mle(DesignParams(30, 20, 3.0), design, 1500, seed=1)
    assert sim.interior.all()
    assert sim.variance_ratio == pytest.approx(1.0, abs=0.15)
    assert sim.mean == pytest.approx(3.0, rel=0.05)


def test_mle_csv():
    sim = simulate_mle(DesignParams(10, 3, 2.0), "pooled", 200, seed=2)
    buf = io.StringIO()
    write_mle_csv([sim], buf)
    lines = buf.getvalue().split("\n")
    assert lines[0] == ",".join(MLE_CSV_HEADER)
    assert lines[1].startswith("pooled,10,3,2,200,2,")
