import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from elkwolf.model import PARAMETER_NAMES
from elkwolf.sensitivity import (PrccExperiment, betainc_regularized, lhs_sample, prcc,
                                 rank_transform, run_prcc_experiment, t_two_sided_p)


def test_lhs_strata():
    x = lhs_sample([(0.0, 1.0)], 4, seed=0)[:, 0]
    assert sorted(np.floor(x * 4).astype(int)) == [0, 1, 2, 3]


def test_lhs_deterministic_and_scaled():
    a = lhs_sample([(1, 3), (-2, -1)], 50, seed=5)
    assert np.array_equal(a, lhs_sample([(1, 3), (-2, -1)], 50, seed=5))
    assert not np.array_equal(a, lhs_sample([(1, 3), (-2, -1)], 50, seed=6))
    assert np.all((a[:, 0] >= 1) & (a[:, 0] <= 3) & (a[:, 1] >= -2) & (a[:, 1] <= -1))
    for j, (lo, hi) in enumerate([(1, 3), (-2, -1)]):
        strata = np.floor((a[:, j] - lo) / (hi - lo) * 50).astype(int)
        assert sorted(strata) == list(range(50))


def test_lhs_uniform_marginals():
    x = lhs_sample([(0, 1)] * 11, 200, seed=1)
    for col in x.T:
        assert stats.kstest(col, "uniform").pvalue > 0.01
    # independent permutations: columns are not rank-identical
    assert abs(np.corrcoef(x[:, 0], x[:, 1])[0, 1]) < 0.3


@pytest.mark.parametrize("ranges,n", [([(1, 1)], 5), ([(2, 1)], 5), ([(0, 1)], 1), ([1, 2], 5)])
def test_lhs_errors(ranges, n):
    with pytest.raises(ValueError):
        lhs_sample(ranges, n, 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 200), st.floats(0.05, 200), st.floats(0, 1))
def test_betainc_against_scipy(a, b, x):
    assert betainc_regularized(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-10)


@pytest.mark.parametrize("t", [0.0, 0.3, -1.2, 2.5, 7.0, 40.0])
@pytest.mark.parametrize("dof", [1, 2, 5, 188])
def test_t_pvalue_against_scipy(t, dof):
    assert t_two_sided_p(t, dof) == pytest.approx(2 * stats.t.sf(abs(t), dof), abs=1e-10)


def test_pvalue_monotone_in_t():
    ps = [t_two_sided_p(t, 20) for t in np.linspace(0, 10, 101)]
    assert all(a > b for a, b in zip(ps, ps[1:]))
    assert t_two_sided_p(math.inf, 20) == 0.0


def test_rank_ties_averaged():
    assert list(rank_transform([3.0, 1.0, 3.0, 2.0])) == [3.5, 1.0, 3.5, 2.0]


def test_hand_example():
    # Spearman: r(x1,y)=0.8, r(x2,y)=-0.3, r(x1,x2)=-0.8, so
    # PRCC1 = 0.56/sqrt(0.36*0.91), PRCC2 = 0.34/0.36
    X = np.array([[1, 5], [2, 3], [3, 4], [4, 1], [5, 2]], dtype=float)
    y = np.array([2, 1, 4, 3, 5], dtype=float)
    res = prcc(X, y)
    assert res.dof == 2
    assert res.prcc[0] == pytest.approx(0.56 / math.sqrt(0.36 * 0.91), rel=1e-12)
    assert res.prcc[1] == pytest.approx(0.34 / 0.36, rel=1e-12)
    t1 = res.prcc[0] * math.sqrt(2 / (1 - res.prcc[0] ** 2))
    assert res.t[0] == pytest.approx(t1, rel=1e-12)
    assert res.p[0] == pytest.approx(2 * stats.t.sf(t1, 2), abs=1e-10)


def test_prcc_matches_precision_matrix_formula():
    rng = np.random.default_rng(3)
    X = rng.random((80, 4))
    y = X[:, 0] ** 2 - np.log(X[:, 1] + 0.1) + 0.2 * rng.normal(size=80)
    Rk = rank_transform(np.column_stack([X, y]))
    Pm = np.linalg.inv(np.corrcoef(Rk, rowvar=False))
    ref = [-Pm[j, 4] / math.sqrt(Pm[j, j] * Pm[4, 4]) for j in range(4)]
    assert np.allclose(prcc(X, y).prcc, ref, atol=1e-12)


def test_perfect_dependence_and_transform_invariance():
    X = lhs_sample([(0, 1)] * 5, 200, seed=2)
    assert prcc(X, X[:, 3].copy()).prcc[3] > 0.99
    y = X[:, 0] - 2 * X[:, 1] + np.sin(6 * X[:, 2])
    a, b = prcc(X, y), prcc(np.exp(X) ** 3, y ** 3 + 5)
    assert np.array_equal(a.prcc, b.prcc) and np.array_equal(a.p, b.p)


def test_dummy_parameter_rarely_significant():
    hits = 0
    for rep in range(20):
        X = lhs_sample([(0, 1)] * 3, 200, seed=300 + rep)
        y = X[:, 0] + X[:, 1] ** 2 + np.random.default_rng(rep).normal(0, 0.05, 200)
        r = prcc(X, y)
        hits += abs(r.prcc[2]) < 0.15 and r.p[2] > 0.05
    assert hits >= 19


def test_prcc_errors():
    X = np.random.default_rng(0).random((13, 11))
    with pytest.raises(ValueError):
        prcc(X, X[:, 0])
    X = np.random.default_rng(0).random((20, 2))
    with pytest.raises(ValueError):
        prcc(X, np.ones(20))
    with pytest.raises(np.linalg.LinAlgError):
        prcc(np.column_stack([X[:, 0], X[:, 0], X[:, 1]]), X[:, 1] + X[:, 0])


def test_experiment_validation():
    with pytest.raises(ValueError):
        PrccExperiment(n_samples=13)
    with pytest.raises(ValueError):
        PrccExperiment(variation=0)
    with pytest.raises(ValueError):
        PrccExperiment(interpretation="full")
    r = PrccExperiment().ranges()
    base = np.array([PrccExperiment().baseline.as_dict()[n] for n in PARAMETER_NAMES])
    assert np.allclose(r, np.column_stack([0.5 * base, 1.5 * base]))
    r2 = PrccExperiment(interpretation="halfwidth").ranges()
    assert np.all(r2[:, 0] >= 1e-12) and np.allclose(r2[:, 1], 2 * base)


@pytest.fixture(scope="module")
def table():
    return run_prcc_experiment(PrccExperiment())


def test_experiment_reproduces_significance_set(table):
    assert set(PARAMETER_NAMES) - table.significant_parameters() == {"q", "psi", "theta1"}
    assert table.dropped == 0
    assert table.prcc.shape == (11, 3, 400)
    assert np.all(np.abs(table.prcc) <= 1) and np.all((table.p >= 0) & (table.p <= 1))
    assert table.times[0] == 1 and table.times[-1] == 400


def test_eta_sign_on_N(table):
    r, p = table.final("eta", "N")
    assert r > 0 and p < 0.05


def test_rows_order(table):
    rows = list(table.rows())
    assert len(rows) == 11 * 3 * 400
    assert rows[0][:3] == ("alpha", "E", 1.0)
    assert rows[400][:2] == ("alpha", "N")


def test_workers_bit_identical(table):
    small = PrccExperiment(n_samples=30, horizon=50, time_points=50)
    a = run_prcc_experiment(small)
    b = run_prcc_experiment(small, workers=3)
    assert np.array_equal(a.prcc, b.prcc) and np.array_equal(a.p, b.p)
