"""Randomized equivalence suites: production kernels against the brute-force oracles."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import pandas as pd

from . import oracles
from .abnormal import cat, line_fit
from .market import winsorize
from .minhash import MinHasher, estimate_jaccard, shingles
from .panel import PanelTable, dcluster_cov, fe_ols, robust_cov
from .study import average_curve, rank_buckets

TOLERANCES = {
    "fe_ols": 1e-8,
    "dcluster_cov": 1e-8,
    "robust_limit": 1e-12,
    "minhash_jaccard": 0.05,
    "line_fit": 1e-10,
    "masked_sum": 1e-12,
    "masked_mean": 1e-12,
    "quantile": 1e-12,
    "rank_buckets": 0.0,
}


def random_panel(rng: np.random.Generator, n_max: int = 500, k_max: int = 4):
    """Unbalanced panel with firm and quarter labels and a few regressors."""
    n_firms = int(rng.integers(5, 30))
    n_q = int(rng.integers(4, 20))
    n = int(rng.integers(max(60, n_firms + n_q + 10), n_max + 1))
    k = int(rng.integers(1, k_max + 1))
    firm = rng.integers(0, n_firms, n)
    quarter = rng.integers(0, n_q, n)
    X = rng.normal(size=(n, k)) + 0.3 * rng.normal(size=n_firms)[firm, None]
    y = X @ rng.normal(size=k) + rng.normal(size=n_firms)[firm] + rng.normal(size=n_q)[quarter] + rng.normal(size=n)
    return y, X, firm.astype(str), quarter.astype(str)


def _fe_ols(rng) -> tuple[int, float]:
    y, X, firm, quarter = random_panel(rng)
    fit = fe_ols(PanelTable(y, X, [f"x{i}" for i in range(X.shape[1])], firm, quarter), cov_type=None)
    ref = oracles.oracle_ols_dummies(y, X, firm, quarter)
    return len(y), float(np.abs(fit.coef - ref).max())


def _dcluster(rng) -> tuple[int, float]:
    y, X, firm, quarter = random_panel(rng)
    e = rng.normal(size=len(y))
    got = dcluster_cov(X, e, firm, quarter)
    ref = oracles.oracle_dcluster_cov(e, X, firm, quarter)
    if np.linalg.eigvalsh((ref + ref.T) / 2).min() < 0:
        # production floors negative eigenvalues; compare only the PSD cases
        return len(y), 0.0
    return len(y), float(np.abs(got - ref).max() / max(1.0, np.abs(ref).max()))


def _robust_limit(rng) -> tuple[int, float]:
    n = int(rng.integers(30, 300))
    X = rng.normal(size=(n, 3))
    e = rng.normal(size=n)
    ids = np.arange(n).astype(str)
    got = dcluster_cov(X, e, ids, ids[::-1].copy())
    ref = robust_cov(X, e)
    return n, float(np.abs(got - ref).max())


def _random_doc(rng, vocab, n):
    return [vocab[i] for i in rng.integers(0, len(vocab), n)]


def _minhash(rng, hasher=MinHasher(128, seed=1), pairs: int = 20) -> tuple[int, float]:
    """Mean absolute error of the signature estimate over ``pairs`` edited document pairs."""
    vocab = [f"w{i}" for i in range(400)]
    errs = []
    for _ in range(pairs):
        base = _random_doc(rng, vocab, int(rng.integers(60, 200)))
        other = list(base)
        n_edit = int(rng.integers(0, len(base)))
        for i in rng.choice(len(base), n_edit, replace=False):
            other[i] = vocab[int(rng.integers(len(vocab)))]
        ref = oracles.oracle_jaccard(base, other, 5)
        est = estimate_jaccard(hasher.signature(shingles(base, 5)), hasher.signature(shingles(other, 5)))
        errs.append(abs(est - ref))
    return pairs, float(np.mean(errs))


def _line_fit(rng) -> tuple[int, float]:
    n = int(rng.integers(3, 60))
    x, y = rng.normal(size=n), rng.normal(size=n)
    a, b, _ = line_fit(x, y)
    ra, rb = oracles.oracle_ols_2x2(x, y)
    return n, max(abs(a - ra), abs(b - rb))


def _masked_sum(rng) -> tuple[int, float]:
    vals = {t: float(rng.normal()) for t in range(-5, 21) if rng.random() < 0.6}
    vals.setdefault(0, 0.5)
    lo, hi = sorted(rng.integers(-5, 21, 2).tolist())
    ref = oracles.oracle_masked_sum(vals, lo, hi)
    if not np.isfinite(ref):
        return len(vals), 0.0
    return len(vals), abs(cat(vals, lo, hi) - ref)


def _masked_mean(rng) -> tuple[int, float]:
    n_ev = int(rng.integers(2, 30))
    paths = [{t: float(rng.normal()) for t in range(-5, 21) if rng.random() < 0.7} for _ in range(n_ev)]
    long = pd.DataFrame(
        [(f"e{i}", t, v) for i, p in enumerate(paths) for t, v in p.items()], columns=["event_id", "tau", "v"]
    )
    labels = pd.Series("all", index=[f"e{i}" for i in range(n_ev)])
    curve = average_curve(long, labels, "v").set_index("tau")
    dev = 0.0
    for t in range(-5, 21):
        m, c = oracles.oracle_masked_mean(paths, t)
        if c == 0:
            dev = max(dev, float(t in curve.index))
            continue
        dev = max(dev, abs(curve.loc[t, "mean"] - m), abs(curve.loc[t, "count"] - c))
    return n_ev, dev


def _quantile(rng) -> tuple[int, float]:
    n = int(rng.integers(2, 500))
    x = rng.standard_t(3, size=n)
    w = winsorize(x, 0.01, 0.99)
    lo, hi = oracles.oracle_quantile(x, 0.01), oracles.oracle_quantile(x, 0.99)
    return n, float(np.abs(w - np.clip(x, lo, hi)).max())


def _buckets(rng) -> tuple[int, float]:
    n = int(rng.integers(5, 80))
    q = int(rng.integers(2, 6))
    vals = rng.integers(0, 4, n).astype(float)  # heavy ties
    keys = [f"k{int(i):03d}" for i in rng.permutation(n)]
    got = rank_buckets(vals, keys, q)
    ref = oracles.oracle_rank_buckets(vals.tolist(), keys, q)
    return n, float(np.abs(np.asarray(got) - np.asarray(ref)).max())


SUITES: dict[str, Callable[[np.random.Generator], tuple[int, float]]] = {
    "fe_ols": _fe_ols,
    "dcluster_cov": _dcluster,
    "robust_limit": _robust_limit,
    "minhash_jaccard": _minhash,
    "line_fit": _line_fit,
    "masked_sum": _masked_sum,
    "masked_mean": _masked_mean,
    "quantile": _quantile,
    "rank_buckets": _buckets,
}


def run_suite(name: str, seeds: int = 100) -> list[oracles.OracleReport]:
    if name not in SUITES:
        raise KeyError(name)
    out = []
    for s in range(seeds):
        size, dev = SUITES[name](np.random.default_rng(s))
        out.append(oracles.OracleReport(name, size, dev, TOLERANCES[name]))
    return out


def run_all(names: Iterable[str] | None = None, seeds: int = 100) -> list[oracles.OracleReport]:
    reports = []
    for name in names or SUITES:
        reports.extend(run_suite(name, seeds))
    return reports


def write_report(reports: Iterable[oracles.OracleReport], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["oracle", "size", "max_abs_dev", "tolerance", "passed"])
        for r in reports:
            w.writerow([r.oracle, r.size, f"{r.max_abs_dev:.6g}", r.tolerance, int(r.passed)])
