import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from oosrisk.chisq_moments import InvMomentQuery, central_inv_moment, inv_moment, moment_ratio
from oosrisk.oracle import mc_inv_moment


def quad_inv_moment(k, lam, order):
    # independent route: integrate x^-order against the scipy noncentral chi-square density
    if lam == 0:
        dens = lambda x: stats.chi2.pdf(x, k) * x ** (-order)
    else:
        dens = lambda x: stats.ncx2.pdf(x, k, lam) * x ** (-order)
    mean = k + lam
    pieces = [0.0, mean / 4, mean, 4 * mean + 50, np.inf]
    return sum(integrate.quad(dens, a, b, limit=200, epsabs=0, epsrel=1e-12)[0]
               for a, b in zip(pieces[:-1], pieces[1:]))


def test_central_values_exact():
    assert inv_moment(4, 0.0, 1) == 0.5
    assert inv_moment(6, 0.0, 2) == 0.125
    assert moment_ratio(4, 0.0, 1) == 2.0


@pytest.mark.parametrize("k,lam,order", [
    (5, 2.0, 1), (3, 0.7, 1), (7, 15.0, 2), (12, 120.0, 1), (9, 40.0, 2), (30, 3.0, 2),
])
def test_series_matches_quadrature(k, lam, order):
    assert inv_moment(k, lam, order) == pytest.approx(quad_inv_moment(k, lam, order), rel=1e-8)


def test_series_matches_monte_carlo():
    est = mc_inv_moment(5, 2.0, 1, reps=10**7, seed=7)
    assert est.covers(inv_moment(5, 2.0, 1))


def test_moment_ratio_limits():
    assert abs(moment_ratio(10**6, 0.0, 1) - 1) <= 1e-4
    assert moment_ratio(10**6, 0.0, 1) == pytest.approx(10**6 / (10**6 - 2), rel=1e-12)
    assert abs(moment_ratio(3, 1e6, 1) - 1) <= 1e-2
    # both paths with k + lam >= 1e6, first and second moments
    for order in (1, 2):
        assert abs(moment_ratio(10**6, 0.0, order) - 1) <= 1e-2
        assert abs(moment_ratio(6, 1e6, order) - 1) <= 1e-2


def test_large_noncentrality_no_underflow():
    v = inv_moment(162, 7.0e6, 2)
    assert np.isfinite(v) and v > 0
    assert v * (7.0e6 + 162) ** 2 == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("k,order", [(2, 1), (4, 2), (1, 1)])
def test_rejects_infinite_moments(k, order):
    with pytest.raises(ValueError):
        inv_moment(k, 1.0, order)


def test_rejects_bad_queries():
    with pytest.raises(ValueError):
        inv_moment(5, -1.0, 1)
    with pytest.raises(ValueError):
        InvMomentQuery(5, 1.0, 3)
    with pytest.raises(ValueError):
        InvMomentQuery(5, 1.0, 1, tol=1e-3)


def test_query_object_roundtrip():
    q = InvMomentQuery(8, 3.5, 2)
    assert inv_moment(q) == inv_moment(8, 3.5, 2)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(5, 60), lam=st.floats(0, 500), dlam=st.floats(0.01, 50),
       order=st.sampled_from([1, 2]))
def test_decreasing_in_noncentrality(k, lam, dlam, order):
    assert inv_moment(k, lam + dlam, order) < inv_moment(k, lam, order)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(5, 60), lam=st.floats(0, 500), order=st.sampled_from([1, 2]))
def test_decreasing_in_df_and_dominated(k, lam, order):
    assert inv_moment(k + 1, lam, order) < inv_moment(k, lam, order)
    assert inv_moment(k, lam, order) <= central_inv_moment(k, order) * (1 + 1e-14)


def test_oracle_equivalence_random_queries():
    rng = np.random.default_rng(2)
    for i in range(20):
        order = int(rng.integers(1, 3))
        k = int(rng.integers(4 * order + 1, 51))  # finite-variance draws
        lam = float(rng.uniform(0, 100))
        est = mc_inv_moment(k, lam, order, reps=10**5, seed=100 + i)
        assert est.covers(inv_moment(k, lam, order)), (k, lam, order, est)
