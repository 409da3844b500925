import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparseci.estimators import (ALL_SUBSETS, CONSERVATIVE, CONSISTENT, FIXED, FULL, PROTECTED,
                                 RegressionDesign, SingularSubmodelError, ThresholdSchedule,
                                 candidate_models, hard_threshold, post_bic_ls, post_bic_ls_moments,
                                 prob_nonzero, sparsity_prob_at_zero)
from sparseci.gaussian import phi_cdf
from sparseci.simulate import mc_probability

Q_CORR = np.array([[1.0, 0.5], [0.5, 1.0]])


def test_schedule_eta_and_regime():
    s = ThresholdSchedule(1.0, 0.25)
    assert s.eta(10000) == pytest.approx(0.1)
    assert s.regime == CONSISTENT
    assert ThresholdSchedule(2.0, 0.5).regime == CONSERVATIVE
    assert ThresholdSchedule(0.3, 0.0).regime == FIXED
    assert ThresholdSchedule(0.3, 0.0, vanishing=True).regime == CONSISTENT
    assert np.all(s.eta(np.arange(1, 1000)) > 0)


def test_conservative_schedule_limit():
    s = ThresholdSchedule(2.0, 0.5)
    for n in (10, 1000, 10**8):
        assert math.sqrt(n) * s.eta(n) == pytest.approx(2.0)


@pytest.mark.parametrize("text,c,p", [("1*n^-0.25", 1.0, 0.25), ("2 * n^-0.5", 2.0, 0.5),
                                      ("0.5*n^(-0.1)", 0.5, 0.1)])
def test_schedule_parse(text, c, p):
    s = ThresholdSchedule.parse(text)
    assert (s.c, s.p) == (c, p)


@pytest.mark.parametrize("text", ["n^-0.25", "1*n^0.25", "-1*n^-0.2", "1*n^-0.7", "abc"])
def test_schedule_parse_rejects(text):
    with pytest.raises(ValueError):
        ThresholdSchedule.parse(text)


def test_hard_threshold_examples():
    s = ThresholdSchedule(1.0, 0.5)          # eta_100 = 0.1
    assert hard_threshold(0.0, 100, s) == 0.0
    assert hard_threshold(0.5, 100, s) == 0.5
    assert hard_threshold(s.eta(100), 100, s) == 0.0
    assert hard_threshold(-s.eta(100), 100, s) == 0.0


def test_hard_threshold_rejects_non_finite():
    with pytest.raises(ValueError):
        hard_threshold(math.nan, 10, eta=0.1)


@given(st.floats(-1e6, 1e6), st.integers(1, 10**6))
def test_hard_threshold_odd_and_either_zero_or_identity(y, n):
    s = ThresholdSchedule(1.0, 0.25)
    out = hard_threshold(y, n, s)
    assert hard_threshold(-y, n, s) == -out
    assert out == 0.0 or out == y


def test_hard_threshold_vectorised():
    y = np.array([-0.3, -0.1, 0.0, 0.05, 0.2])
    assert np.array_equal(hard_threshold(y, 1, eta=0.1), np.array([-0.3, 0.0, 0.0, 0.0, 0.2]))


def test_sparsity_prob_examples():
    assert sparsity_prob_at_zero(100, eta=0.0) == 0.0
    p = sparsity_prob_at_zero(10000, eta=0.1)
    assert p == 1.0 - 2.0 * phi_cdf(-10.0)
    # mpmath: 2 Phi(-10) = 1.5239706048321052e-23
    assert math.isclose(2.0 * phi_cdf(-10.0), 1.523970604832105213e-23, rel_tol=1e-13)


def test_sparsity_prob_increases_to_one():
    s = ThresholdSchedule(1.0, 0.25)
    vals = [sparsity_prob_at_zero(n, s) for n in (1, 10, 100, 1000, 10**4)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert 1.0 - vals[-2] < 1e-7 and vals[-1] == 1.0


def test_sparsity_prob_strictly_increasing_in_scaled_threshold():
    t = np.linspace(0.0, 8.0, 400)
    vals = [sparsity_prob_at_zero(1, eta=float(x)) for x in t]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_nonzero_prob_vanishes_along_slow_local_alternatives():
    # eta_n = n^-1/4, theta_n = 1 / n^(3/8): v_n eta_n = n^(1/8) -> infinity
    ns = [10**j for j in range(2, 17)]
    vals = [prob_nonzero(1.0 / n**0.375, n, n**-0.25) for n in ns]
    assert all(b < a or b == 0.0 for a, b in zip(vals, vals[1:]))
    assert vals[0] > 1e-3 and vals[-1] < 1e-10


# --------------------------------------------------------------------------
# regression
# --------------------------------------------------------------------------

def test_design_rejects_bad_inputs():
    with pytest.raises(ValueError):
        RegressionDesign([[1, 2], [2, 1]], 1, 10)        # indefinite
    with pytest.raises(ValueError):
        RegressionDesign([[1, 0.5], [0.4, 1]], 1, 10)    # asymmetric
    with pytest.raises(ValueError):
        RegressionDesign(Q_CORR, 0, 10)


@pytest.mark.parametrize("Q", [np.eye(3), Q_CORR, np.array([[2.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 0.5]])])
@pytest.mark.parametrize("n", [7, 64, 1000])
def test_design_matrix_reproduces_Q(Q, n):
    d = RegressionDesign(Q, 1, n)
    X = d.matrix()
    assert X.shape == (n, Q.shape[0])
    np.testing.assert_allclose(X.T @ X / n, Q, atol=1e-12)
    np.testing.assert_array_equal(X, d.matrix())


def test_design_first_column_is_ones_when_q11_is_one():
    X = RegressionDesign(Q_CORR, 1, 50).matrix()
    np.testing.assert_allclose(X[:, 0], 1.0, atol=1e-12)


def test_candidate_models():
    d = RegressionDesign(np.eye(3), 2, 10)
    assert candidate_models(d, PROTECTED) == [(0,), (0, 1), (0, 2), (0, 1, 2)]
    assert len(candidate_models(d, ALL_SUBSETS)) == 8
    assert candidate_models(d, FULL) == [(0, 1, 2)]
    with pytest.raises(ValueError):
        candidate_models(d, "greedy")


def test_full_mode_equals_ols():
    d = RegressionDesign(Q_CORR, 1, 200)
    X = d.matrix()
    y = X @ np.array([0.3, 0.0]) + np.random.default_rng(1).normal(size=200)
    est, sel = post_bic_ls(y, d, FULL)
    ols = np.linalg.lstsq(X, y, rcond=None)[0]
    np.testing.assert_allclose(est, ols, atol=1e-12)
    assert sel.all()


def test_moment_path_matches_data_path():
    rng = np.random.default_rng(3)
    Q = np.array([[1.0, 0.3, 0.2], [0.3, 1.0, 0.4], [0.2, 0.4, 1.0]])
    for mode in (PROTECTED, ALL_SUBSETS, FULL):
        d = RegressionDesign(Q, 2, 300)
        X = d.matrix()
        for _ in range(30):
            theta = rng.normal(scale=0.15, size=3) * rng.integers(0, 2, size=3)
            y = X @ theta + rng.normal(size=300)
            est, sel = post_bic_ls(y, d, mode, X=X)
            est_m, sel_m = post_bic_ls_moments((X.T @ y)[None, :], d, mode)
            np.testing.assert_array_equal(sel, sel_m[0])
            np.testing.assert_allclose(est, est_m[0], atol=1e-10)


def test_excluded_coefficients_are_exactly_zero():
    d = RegressionDesign(Q_CORR, 1, 500)
    X = d.matrix()
    y = np.random.default_rng(5).normal(size=500)
    est, sel = post_bic_ls(y, d, ALL_SUBSETS, X=X)
    assert np.all(est[~sel] == 0.0)


def test_singular_submodel_reports_id():
    d = RegressionDesign(Q_CORR, 1, 20)
    X = np.ones((20, 2))
    with pytest.raises(SingularSubmodelError) as info:
        post_bic_ls(np.zeros(20), d, FULL, X=X)
    assert info.value.model_id == 0 and info.value.columns == (0, 1)


def test_intercept_only_selects_zero():
    d = RegressionDesign([[1.0]], 1, 10000)
    y = np.random.default_rng(11).normal(size=10000)
    est, sel = post_bic_ls(y, d, ALL_SUBSETS)
    assert est[0] == 0.0 and not sel[0]


def _p_beta_zero_closed(n, gamma, Q, sigma=1.0):
    # beta is dropped iff n beta_full^2 / (sigma^2 V22) < log n, beta_full ~ N(gamma/sqrt(n), sigma^2 V22 / n)
    sd = sigma * math.sqrt(np.linalg.inv(Q)[1, 1])
    r = math.sqrt(math.log(n))
    return phi_cdf(r - gamma / sd) - phi_cdf(-r - gamma / sd)


@pytest.mark.parametrize("gamma", [0.0, 2.0])
def test_selection_probability_matches_closed_form(gamma):
    vals = []
    for n in (100, 1000, 10000):
        d = RegressionDesign(Q_CORR, 1, n)
        theta = np.array([0.2, gamma / math.sqrt(n)])
        est = mc_probability(lambda s: post_bic_ls_moments(s, d)[0][:, 1] == 0.0, d, theta,
                             100_000, seed=7, substream_id=n)
        closed = _p_beta_zero_closed(n, gamma, Q_CORR)
        assert est.agrees_with(closed)
        vals.append(est.p_hat)
    if gamma == 0.0:
        assert vals[0] < vals[1] < vals[2]
        assert vals[-1] > 0.99
