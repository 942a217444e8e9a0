import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from mediatone.errors import Collinearity, TooFewClusters, ValidationError, ZeroVariance
from mediatone.oracles import oracle_cluster_meat, oracle_dcluster_cov, oracle_ols_dummies, oracle_ols_residuals
from mediatone.panel import (
    PanelFit,
    PanelTable,
    cluster_cov,
    dcluster_cov,
    demean,
    fe_ols,
    robust_cov,
    small_sample_factor,
    wald_equal,
)
from mediatone.verify import random_panel


def _table(y, X, firm, quarter, names=None):
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    return PanelTable(y, X, names or [f"x{i}" for i in range(X.shape[1])], firm, quarter)


@pytest.mark.parametrize("seed", range(8))
def test_matches_dummy_oracle(seed):
    y, X, firm, quarter = random_panel(np.random.default_rng(seed), n_max=200)
    fit = fe_ols(_table(y, X, firm, quarter))
    assert_allclose(fit.coef, oracle_ols_dummies(y, X, firm, quarter), atol=1e-8)
    assert_allclose(fit.residuals, oracle_ols_residuals(y, X, firm, quarter), atol=1e-8)
    assert_allclose(fit.fitted + fit.residuals, y, atol=1e-12)


def test_single_firm_single_quarter_is_plain_ols():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 2))
    y = 1.0 + X @ [0.5, -2.0] + rng.normal(size=40)
    fit = fe_ols(_table(y, X, ["A"] * 40, ["2005Q1"] * 40), cov_type="robust")
    ref, *_ = np.linalg.lstsq(np.column_stack([np.ones(40), X]), y, rcond=None)
    assert_allclose(fit.coef, ref[1:], atol=1e-12)


def test_absorbed_regressor_dropped_and_reported():
    y, X, firm, quarter = random_panel(np.random.default_rng(3))
    codes = pd.factorize(firm)[0]
    firm_level = np.random.default_rng(4).normal(size=codes.max() + 1)[codes]
    fit = fe_ols(_table(y, np.column_stack([X, firm_level]), firm, quarter,
                        [f"x{i}" for i in range(X.shape[1])] + ["firm_const"]))
    assert fit.dropped == ["firm_const"]
    assert_allclose(fit.coef, oracle_ols_dummies(y, X, firm, quarter), atol=1e-8)


def test_collinear_regressors_raise():
    y, X, firm, quarter = random_panel(np.random.default_rng(5))
    Z = np.column_stack([X[:, 0], 2 * X[:, 0] + 0.0])
    with pytest.raises(Collinearity) as err:
        fe_ols(_table(y, Z, firm, quarter, ["a", "b"]))
    assert {"a", "b"} <= set(err.value.args[0])


def test_missing_cells_rejected_and_dropped_from_frame():
    with pytest.raises(ValidationError):
        PanelTable([1.0, np.nan], [[1.0], [2.0]], ["x"], ["a", "b"], ["q", "q"])
    df = pd.DataFrame({"y": [1.0, 2, np.nan, 4], "x": [0.0, 1, 2, np.inf], "firm_id": list("abab"),
                       "year_quarter": ["q1"] * 4})
    assert PanelTable.from_frame(df, "y", ["x"]).n == 2


def test_demean_balanced_is_exact_in_one_sweep():
    firm = np.repeat(np.arange(4), 3)
    quarter = np.tile(np.arange(3), 4)
    z = np.arange(12.0) ** 2
    out = demean(z, [firm, quarter], max_iter=1)
    for g in (firm, quarter):
        assert_allclose(np.bincount(g, weights=out), 0.0, atol=1e-10)


# ---------------------------------------------------------------- covariance

def test_two_cluster_toy_meat():
    X = np.array([[1.0], [2.0], [1.0], [3.0]])
    e = np.array([0.5, -1.0, 2.0, 1.0])
    clusters = ["a", "a", "b", "b"]
    # cluster a score: 0.5 - 2 = -1.5; cluster b: 2 + 3 = 5
    meat = oracle_cluster_meat(e, X, clusters)
    assert meat[0, 0] == pytest.approx(1.5**2 + 5**2)
    bread = 1 / (X.T @ X)
    V = cluster_cov(X, e, clusters)
    assert V[0, 0] == pytest.approx(small_sample_factor(2, 4, 1) * bread[0, 0] ** 2 * 27.25)
    assert small_sample_factor(2, 4, 1) == pytest.approx(2 * 3 / 3)


def test_singleton_clusters_reduce_to_robust():
    rng = np.random.default_rng(1)
    X, e = rng.normal(size=(80, 3)), rng.normal(size=80)
    ids = np.arange(80)
    assert_allclose(dcluster_cov(X, e, ids, ids[::-1]), robust_cov(X, e), atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_dcluster_matches_oracle_when_psd(seed):
    rng = np.random.default_rng(seed)
    y, X, firm, quarter = random_panel(rng, n_max=300)
    e = rng.normal(size=len(y))
    ref = oracle_dcluster_cov(e, X, firm, quarter)
    got = dcluster_cov(X, e, firm, quarter)
    if np.linalg.eigvalsh(ref).min() >= 0:
        assert_allclose(got, ref, atol=1e-8 * np.abs(ref).max())
    assert np.linalg.eigvalsh(got).min() >= -1e-12


def test_dcluster_invariant_to_relabeling():
    rng = np.random.default_rng(2)
    y, X, firm, quarter = random_panel(rng)
    e = rng.normal(size=len(y))
    firm2 = np.array(["zz" + f[::-1] for f in firm])
    quarter2 = np.array([f"q{int(q) * 7}" for q in quarter])
    assert_allclose(dcluster_cov(X, e, firm, quarter), dcluster_cov(X, e, firm2, quarter2), atol=1e-14)


def test_single_cluster_dimension_errors():
    y, X, firm, _ = random_panel(np.random.default_rng(0))
    with pytest.raises(TooFewClusters):
        fe_ols(_table(y, X, firm, ["2005Q1"] * len(y)))


def test_clustered_errors_wider_under_within_cluster_correlation():
    ratios = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n_f, n_q = 40, 12
        firm = np.repeat(np.arange(n_f), n_q)
        quarter = np.tile(np.arange(n_q), n_f)
        trend = np.linspace(-1, 1, n_q)[quarter]
        # firm-specific trends survive the fixed effects and correlate within firm
        x = rng.normal(size=n_f * n_q) + rng.normal(size=n_f)[firm] * trend
        shock = rng.normal(size=n_f)[firm] * trend
        y = 0.5 * x + 2 * shock + rng.normal(size=n_f * n_q)
        t = _table(y, x, firm.astype(str), quarter.astype(str))
        ratios.append(fe_ols(t).se[0] / fe_ols(t, cov_type="unadjusted").se[0])
    assert np.mean(ratios) > 1


# ---------------------------------------------------------------- Wald

def _fit(coef, cov):
    k = len(coef)
    return PanelFit(columns=[f"b{i}" for i in range(k)], coef=np.asarray(coef, float), cov=np.asarray(cov, float),
                    residuals=np.zeros(1), fitted=np.zeros(1), fixed_effects=np.zeros(1), r2=0.0, r2_within=0.0,
                    n=1, n_clusters={}, cov_type="given")


def test_wald_examples():
    assert wald_equal(_fit([0.3, 0.3], np.eye(2)), "b0", "b1") == (0.0, 1.0)
    W, p = wald_equal(_fit([1.0, 0.0], np.eye(2)), "b0", "b1")
    assert W == pytest.approx(0.5)
    assert p == pytest.approx(0.4795001221869535)
    with pytest.raises(ZeroVariance):
        wald_equal(_fit([1.0, 0.0], np.ones((2, 2))), "b0", "b1")


def test_pvalues_use_normal_reference():
    fit = _fit([1.96, 0.0], np.eye(2))
    assert fit.pvalue[0] == pytest.approx(0.04999579, abs=1e-7)
    assert list(fit.summary_frame().columns) == ["coef", "se", "t", "p"]
