"""Fixed-effects panel OLS with firm and year-quarter effects and double clustering."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import stats

from .errors import Collinearity, TooFewClusters, ValidationError, ZeroVariance

log = logging.getLogger(__name__)


@dataclass
class PanelTable:
    y: np.ndarray
    X: np.ndarray
    columns: list[str]
    firm: np.ndarray
    quarter: np.ndarray
    dependent: str = "y"
    index: np.ndarray | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        self.X = X.reshape(len(self.y), X.shape[-1] if X.ndim == 2 else -1)
        self.firm = np.asarray(self.firm)
        self.quarter = np.asarray(self.quarter)
        if not (np.isfinite(self.y).all() and np.isfinite(self.X).all()):
            raise ValidationError("panel table contains missing or infinite cells")

    @property
    def n(self) -> int:
        return len(self.y)

    @classmethod
    def from_frame(
        cls,
        df: pd.DataFrame,
        dependent: str,
        regressors: Sequence[str],
        firm: str = "firm_id",
        quarter: str = "year_quarter",
    ) -> "PanelTable":
        """Build from a frame, dropping rows with any missing cell in the model columns."""
        cols = [dependent, *regressors]
        sub = df.loc[df[cols].notna().all(axis=1) & np.isfinite(df[cols].astype(float)).all(axis=1)]
        if len(sub) < len(df):
            log.debug("dropped %d rows with missing cells for %s", len(df) - len(sub), dependent)
        return cls(
            y=sub[dependent].to_numpy(float),
            X=sub[list(regressors)].to_numpy(float),
            columns=list(regressors),
            firm=sub[firm].to_numpy(),
            quarter=sub[quarter].to_numpy(),
            dependent=dependent,
            index=sub.index.to_numpy(),
        )


@dataclass
class PanelFit:
    columns: list[str]
    coef: np.ndarray
    cov: np.ndarray | None
    residuals: np.ndarray
    fitted: np.ndarray
    fixed_effects: np.ndarray
    r2: float
    r2_within: float
    n: int
    n_clusters: dict[str, int]
    cov_type: str
    dropped: list[str] = field(default_factory=list)
    X_within: np.ndarray | None = field(default=None, repr=False)
    dependent: str = "y"
    index: np.ndarray | None = field(default=None, repr=False)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    @property
    def tstat(self) -> np.ndarray:
        return self.coef / self.se

    @property
    def pvalue(self) -> np.ndarray:
        # normal reference distribution
        return 2 * stats.norm.sf(np.abs(self.tstat))

    def params(self) -> pd.Series:
        return pd.Series(self.coef, index=self.columns)

    def loc(self, name: str) -> int:
        return self.columns.index(name)

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"coef": self.coef, "se": self.se, "t": self.tstat, "p": self.pvalue},
            index=self.columns,
        )


def _codes(labels) -> tuple[np.ndarray, int]:
    uniq, codes = np.unique(np.asarray(labels), return_inverse=True)
    return codes.ravel(), len(uniq)


def demean(
    Z: np.ndarray,
    groups: Sequence[np.ndarray],
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> np.ndarray:
    """Sweep out group means for every grouping until no cell moves more than ``tol``.

    Alternating projections onto the orthogonal complement of each set of
    group dummies; exact after one sweep for a single grouping or a balanced
    two-way panel.
    """
    Z = np.array(Z, dtype=float, copy=True)
    squeeze = Z.ndim == 1
    if squeeze:
        Z = Z[:, None]
    prepared = []
    for g in groups:
        codes, G = _codes(g)
        counts = np.bincount(codes, minlength=G).astype(float)
        prepared.append((codes, G, counts))
    for it in range(max_iter):
        change = 0.0
        for codes, G, counts in prepared:
            means = np.empty((G, Z.shape[1]))
            for c in range(Z.shape[1]):
                means[:, c] = np.bincount(codes, weights=Z[:, c], minlength=G) / counts
            step = means[codes]
            Z -= step
            change = max(change, float(np.abs(step).max(initial=0.0)))
        if change < tol or len(prepared) == 1:
            break
    else:
        log.warning("demeaning stopped after %d sweeps (last change %.3g)", max_iter, change)
    return Z[:, 0] if squeeze else Z


def _group_meat(scores: np.ndarray, codes: np.ndarray, G: int) -> np.ndarray:
    sums = np.zeros((G, scores.shape[1]))
    np.add.at(sums, codes, scores)
    return sums.T @ sums


def small_sample_factor(G: int, n: int, k: int) -> float:
    """Cluster-count correction applied to each term: G/(G-1) * (n-1)/(n-k)."""
    return G / (G - 1) * (n - 1) / max(n - k, 1)


def cluster_cov(X: np.ndarray, resid: np.ndarray, clusters, bread: np.ndarray | None = None) -> np.ndarray:
    """One-way cluster-robust sandwich with the small-sample factor."""
    n, k = X.shape
    codes, G = _codes(clusters)
    if G < 2:
        raise TooFewClusters(f"need at least 2 clusters, got {G}")
    if bread is None:
        bread = np.linalg.inv(X.T @ X)
    meat = _group_meat(X * resid[:, None], codes, G)
    return small_sample_factor(G, n, k) * bread @ meat @ bread


def _psd_floor(V: np.ndarray) -> np.ndarray:
    V = (V + V.T) / 2
    w, Q = np.linalg.eigh(V)
    if (w < 0).any():
        w = np.clip(w, 0.0, None)
        V = (Q * w) @ Q.T
    return V


def dcluster_cov(
    X: np.ndarray,
    resid: np.ndarray,
    firm,
    quarter,
    bread: np.ndarray | None = None,
) -> np.ndarray:
    """Two-way clustered covariance V_firm + V_quarter - V_(firm, quarter).

    Each term carries its own cluster-count correction; negative eigenvalues of
    the combination are floored at zero.
    """
    fcodes, Gf = _codes(firm)
    qcodes, Gq = _codes(quarter)
    if Gf < 2 or Gq < 2:
        raise TooFewClusters(f"double clustering needs >= 2 clusters per dimension (firm={Gf}, quarter={Gq})")
    if bread is None:
        bread = np.linalg.inv(X.T @ X)
    inter = fcodes.astype(np.int64) * Gq + qcodes
    V = (
        cluster_cov(X, resid, firm, bread)
        + cluster_cov(X, resid, quarter, bread)
        - (cluster_cov(X, resid, inter, bread) if len(np.unique(inter)) > 1 else 0.0)
    )
    return _psd_floor(V)


def robust_cov(X: np.ndarray, resid: np.ndarray, bread: np.ndarray | None = None) -> np.ndarray:
    """Heteroskedasticity-robust (HC1) covariance."""
    n, k = X.shape
    if bread is None:
        bread = np.linalg.inv(X.T @ X)
    meat = (X * resid[:, None] ** 2).T @ X
    return n / max(n - k, 1) * bread @ meat @ bread


def fe_ols(
    table: PanelTable,
    cov_type: str = "dcluster",
    tol: float = 1e-10,
    absorb_tol: float = 1e-10,
) -> PanelFit:
    """OLS of the dependent on the regressors with firm and year-quarter fixed effects.

    Regressors fully absorbed by the fixed effects are dropped and listed in
    ``PanelFit.dropped``; remaining exact collinearity raises ``Collinearity``.
    ``cov_type`` is ``"dcluster"`` (firm and year-quarter), ``"firm"``,
    ``"quarter"``, ``"robust"``, ``"unadjusted"`` or ``None``. Fitted values
    include the recovered fixed effects, so residuals equal those of the
    regression with explicit dummy columns.
    """
    n = table.n
    if n == 0:
        raise ValidationError("empty panel table")
    groups = [table.firm, table.quarter]
    Z = demean(np.column_stack([table.y, table.X]), groups, tol=tol)
    y_w, X_w = Z[:, 0], Z[:, 1:]

    raw_scale = np.sqrt(((table.X - table.X.mean(axis=0)) ** 2).sum(axis=0)) if table.X.size else np.zeros(0)
    within_scale = np.sqrt((X_w**2).sum(axis=0))
    keep = within_scale > absorb_tol * np.maximum(raw_scale, 1e-300)
    keep &= within_scale > 1e-12
    dropped = [c for c, k in zip(table.columns, keep) if not k]
    if dropped:
        log.info("dropping regressors absorbed by fixed effects: %s", dropped)
    columns = [c for c, k in zip(table.columns, keep) if k]
    X_w = X_w[:, keep]
    X_raw = table.X[:, keep]
    k = X_w.shape[1]

    if k:
        colnorm = np.sqrt((X_w**2).sum(axis=0))
        _, s, Vt = np.linalg.svd(X_w / colnorm, full_matrices=False)
        if s[-1] < 1e-10 * s[0]:
            v = Vt[-1]
            involved = [columns[i] for i in np.flatnonzero(np.abs(v) > 1e-6)]
            raise Collinearity(involved)
        coef, *_ = np.linalg.lstsq(X_w, y_w, rcond=None)
    else:
        coef = np.zeros(0)
    resid = y_w - X_w @ coef
    fitted = table.y - resid
    fe = fitted - X_raw @ coef

    tss = float(((table.y - table.y.mean()) ** 2).sum())
    ssr = float(resid @ resid)
    r2 = 1 - ssr / tss if tss > 0 else 0.0
    wss = float(y_w @ y_w)
    r2_within = 1 - ssr / wss if wss > 0 else 0.0

    _, Gf = _codes(table.firm)
    _, Gq = _codes(table.quarter)
    cov = None
    if k and cov_type is not None:
        bread = np.linalg.inv(X_w.T @ X_w)
        if cov_type == "dcluster":
            cov = dcluster_cov(X_w, resid, table.firm, table.quarter, bread)
        elif cov_type == "firm":
            cov = cluster_cov(X_w, resid, table.firm, bread)
        elif cov_type == "quarter":
            cov = cluster_cov(X_w, resid, table.quarter, bread)
        elif cov_type == "robust":
            cov = robust_cov(X_w, resid, bread)
        elif cov_type == "unadjusted":
            dof = max(n - k - (Gf + Gq - 1), 1)
            cov = ssr / dof * bread
        else:
            raise ValueError(f"unknown cov_type {cov_type!r}")
    return PanelFit(
        columns=columns,
        coef=coef,
        cov=cov,
        residuals=resid,
        fitted=fitted,
        fixed_effects=fe,
        r2=r2,
        r2_within=r2_within,
        n=n,
        n_clusters={"firm": Gf, "quarter": Gq},
        cov_type=str(cov_type),
        dropped=dropped,
        X_within=X_w,
        dependent=table.dependent,
        index=table.index,
    )


def wald_equal(fit: PanelFit, a: str, b: str) -> tuple[float, float]:
    """Wald statistic for equal coefficients on ``a`` and ``b`` with a chi-square(1) p-value."""
    i, j = fit.loc(a), fit.loc(b)
    V = fit.cov
    var = V[i, i] + V[j, j] - 2 * V[i, j]
    if not var > 0:
        raise ZeroVariance(f"variance of {a} - {b} is not positive")
    W = float((fit.coef[i] - fit.coef[j]) ** 2 / var)
    return W, float(stats.chi2.sf(W, df=1))
