"""Brute-force reference implementations for the numeric kernels.

Nothing here imports from the rest of the package: each oracle takes the
slow, obvious route (explicit dummy matrices, python sets, loops over
clusters) so that agreement with the production code is informative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class Singular(Exception):
    """Dummy-variable design without full column rank."""


class EmptyDoc(Exception):
    """Document too short to form a single shingle."""


MAX_ORACLE_ROWS = 2000


def _dummies(labels) -> np.ndarray:
    labels = np.asarray(labels)
    levels = sorted(set(labels.tolist()))
    return np.array([[1.0 if lab == lev else 0.0 for lev in levels] for lab in labels])


def oracle_ols_dummies(y, X, firm, quarter) -> np.ndarray:
    """Slopes on ``X`` from OLS with an intercept and explicit firm and quarter dummies.

    One level of each factor is dropped as the base category.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    if len(y) > MAX_ORACLE_ROWS:
        raise ValueError(f"oracle limited to {MAX_ORACLE_ROWS} rows")
    D_f = _dummies(firm)[:, 1:]
    D_q = _dummies(quarter)[:, 1:]
    Z = np.column_stack([X, np.ones(len(y)), D_f, D_q])
    if np.linalg.matrix_rank(Z) < Z.shape[1]:
        raise Singular("dummy design is rank deficient")
    coef, *_ = np.linalg.lstsq(Z, y, rcond=None)
    return coef[: X.shape[1]]


def oracle_ols_residuals(y, X, firm, quarter) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    Z = np.column_stack([X, np.ones(len(y)), _dummies(firm)[:, 1:], _dummies(quarter)[:, 1:]])
    coef, *_ = np.linalg.lstsq(Z, y, rcond=None)
    return y - Z @ coef


def oracle_shingles(tokens, k: int) -> set:
    tokens = list(tokens)
    if len(tokens) < k:
        raise EmptyDoc(f"{len(tokens)} tokens, shingle length {k}")
    return {tuple(tokens[i:i + k]) for i in range(len(tokens) - k + 1)}


def oracle_jaccard(doc_a, doc_b, shingle_len: int = 5) -> float:
    a = oracle_shingles(doc_a, shingle_len)
    b = oracle_shingles(doc_b, shingle_len)
    return len(a & b) / len(a | b)


def oracle_cluster_meat(residuals, X, clusters) -> np.ndarray:
    """Sum over clusters of (X_g' e_g)(X_g' e_g)', one cluster at a time."""
    e = np.asarray(residuals, dtype=float)
    X = np.asarray(X, dtype=float).reshape(len(e), -1)
    clusters = list(clusters)
    k = X.shape[1]
    meat = np.zeros((k, k))
    for g in sorted(set(clusters), key=str):
        score = np.zeros(k)
        for i, c in enumerate(clusters):
            if c == g:
                score += X[i] * e[i]
        meat += np.outer(score, score)
    return meat


def oracle_dcluster_cov(residuals, X, firm, quarter) -> np.ndarray:
    """Two-way clustered sandwich: firm + quarter - intersection, each term with its own
    G/(G-1) * (n-1)/(n-k) factor. No eigenvalue adjustment."""
    e = np.asarray(residuals, dtype=float)
    X = np.asarray(X, dtype=float).reshape(len(e), -1)
    n, k = X.shape
    inter = [f"{a}|{b}" for a, b in zip(firm, quarter)]
    bread = np.linalg.inv(X.T @ X)
    total = np.zeros((k, k))
    for labels, sign in ((list(firm), 1.0), (list(quarter), 1.0), (inter, -1.0)):
        G = len(set(labels))
        c = G / (G - 1) * (n - 1) / (n - k) if G > 1 else 1.0
        total += sign * c * (bread @ oracle_cluster_meat(e, X, labels) @ bread)
    return total


def oracle_ols_2x2(x, y) -> tuple[float, float]:
    """Intercept and slope of a simple regression from the textbook formulas."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    n = len(x)
    sx, sy = sum(x), sum(y)
    sxx = sum(v * v for v in x)
    sxy = sum(a * b for a, b in zip(x, y))
    det = n * sxx - sx * sx
    if det == 0:
        raise Singular("constant regressor")
    slope = (n * sxy - sx * sy) / det
    return (sy - slope * sx) / n, slope


def oracle_masked_sum(values: dict, lo: int, hi: int) -> float:
    total, hit = 0.0, False
    for t in range(lo, hi + 1):
        if t in values:
            total += values[t]
            hit = True
    return total if hit else float("nan")


def oracle_masked_mean(paths: list[dict], tau: int) -> tuple[float, int]:
    vals = [p[tau] for p in paths if tau in p and p[tau] == p[tau]]
    if not vals:
        return float("nan"), 0
    return sum(vals) / len(vals), len(vals)


def oracle_quantile(values, q: float) -> float:
    """Linear interpolation between order statistics at position q * (n - 1)."""
    v = sorted(float(x) for x in values)
    pos = q * (len(v) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (pos - lo) * (v[hi] - v[lo])


def oracle_rank_buckets(values, keys, n: int) -> list[int]:
    """Bucket of each item by brute force: count the items that sort strictly before it."""
    m = len(values)
    out = []
    for i in range(m):
        rank = sum(1 for j in range(m) if (values[j], keys[j]) < (values[i], keys[i]))
        out.append(rank * n // m + 1)
    return out


@dataclass
class OracleReport:
    oracle: str
    size: int
    max_abs_dev: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_abs_dev <= self.tolerance)
