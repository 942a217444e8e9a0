"""Normal-tone model, abnormal tone, cumulative windows and residualized tone.

Series in this module are keyed by event-relative trading day ``tau``; a
missing day is simply absent from the mapping.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import EmptyWindow, InsufficientObservations, MissingObservation, ValidationError
from .panel import PanelTable, fe_ols

log = logging.getLogger(__name__)

WINDOWS: dict[str, tuple[int, int]] = {
    "pre": (-5, -2),
    "event": (-1, 1),
    "short": (2, 5),
    "long": (2, 20),
}

NEWSWIRE = "newswire"


def estimation_window(L: int = 30, K: int = 5) -> tuple[int, int]:
    """Relative days ``(-L-K, -K-1)`` used to fit normal models."""
    return (-L - K, -K - 1)


@dataclass
class NormalToneFit:
    alpha: float
    beta: float
    n_obs: int
    estimation_window: tuple[int, int]
    residual_variance: float
    degenerate: bool = False

    def predict(self, factor: float) -> float:
        return self.alpha + self.beta * factor


def line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, bool]:
    """Intercept and slope of y on x; slope 0 and mean intercept when x is constant."""
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx <= 1e-14 * max(1.0, float(x @ x)):
        return float(ym), 0.0, True
    beta = float(dx @ (y - ym)) / sxx
    return float(ym - beta * xm), beta, False


def paired(series: Mapping[int, float], other: Mapping[int, float], lo: int, hi: int) -> tuple[list[int], np.ndarray, np.ndarray]:
    """Days in [lo, hi] where both series have finite values."""
    taus = []
    for t in range(lo, hi + 1):
        a, b = series.get(t), other.get(t)
        if a is not None and b is not None and np.isfinite(a) and np.isfinite(b):
            taus.append(t)
    return taus, np.array([other[t] for t in taus], dtype=float), np.array([series[t] for t in taus], dtype=float)


def fit_normal_tone(
    tone: Mapping[int, float],
    factor: Mapping[int, float],
    L: int = 30,
    K: int = 5,
    min_obs: int = 10,
) -> NormalToneFit:
    """OLS of tone on a constant and the tone factor over the estimation window.

    A factor with no variation over the window gives the constant model
    (beta 0, alpha the mean tone) and sets ``degenerate``.
    """
    lo, hi = estimation_window(L, K)
    taus, x, y = paired(tone, factor, lo, hi)
    if len(taus) < min_obs:
        raise InsufficientObservations(f"{len(taus)} tone days in the estimation window, need {min_obs}")
    alpha, beta, degenerate = line_fit(x, y)
    if degenerate:
        log.debug("degenerate factor in estimation window; using constant normal tone")
    resid = y - alpha - beta * x
    dof = max(len(taus) - (1 if degenerate else 2), 1)
    return NormalToneFit(alpha, beta, len(taus), (lo, hi), float(resid @ resid) / dof, degenerate)


def atone(tone: float | None, fit: NormalToneFit, factor: float | None) -> float:
    if tone is None or factor is None or not (np.isfinite(tone) and np.isfinite(factor)):
        raise MissingObservation("tone or factor missing")
    return tone - fit.predict(factor)


def atone_series(
    tone: Mapping[int, float],
    factor: Mapping[int, float],
    fit: NormalToneFit,
    start: int | None = None,
    end: int = 20,
) -> dict[int, float]:
    """Abnormal tone on every day in [start, end] with tone and factor present.

    ``start`` defaults to the first day after the estimation window.
    """
    if start is None:
        start = fit.estimation_window[1] + 1
    taus, x, y = paired(tone, factor, start, end)
    return dict(zip(taus, (y - fit.alpha - fit.beta * x).tolist()))


def cat(atones: Mapping[int, float], tau1: int, tau2: int) -> float:
    """Sum of abnormal tone over the window days that have tone."""
    if tau1 > tau2:
        raise ValidationError(f"invalid window ({tau1}, {tau2})")
    vals = [v for t, v in atones.items() if tau1 <= t <= tau2]
    if not vals:
        raise EmptyWindow(f"no tone in window ({tau1}, {tau2})")
    return float(sum(vals))


def cat_windows(atones: Mapping[int, float], windows: Mapping[str, tuple[int, int]] = WINDOWS) -> dict[str, float]:
    """CAT for each named window, NaN where the window has no tone."""
    out = {}
    for name, (a, b) in windows.items():
        try:
            out[name] = cat(atones, a, b)
        except EmptyWindow:
            out[name] = float("nan")
    return out


# ---------------------------------------------------------------------------
# residual CAT


@dataclass
class RcatResult:
    rcat: pd.Series
    explained: pd.Series
    fits: dict[str, object] = field(default_factory=dict)


def rcat(
    df: pd.DataFrame,
    dependent: str,
    regressors: Sequence[str],
    fixed_effects: bool = True,
    firm: str = "firm_id",
    quarter: str = "year_quarter",
) -> RcatResult:
    """Residual of ``dependent`` after the panel fit on ``regressors`` over the whole frame.

    Without fixed effects the fit has a plain intercept.
    """
    work = df
    if not fixed_effects:
        work = df.assign(**{firm: "_", quarter: "_"})
    table = PanelTable.from_frame(work, dependent, regressors, firm=firm, quarter=quarter)
    fit = fe_ols(table, cov_type=None)
    idx = table.index
    return RcatResult(
        rcat=pd.Series(fit.residuals, index=idx).reindex(df.index),
        explained=pd.Series(fit.fitted, index=idx).reindex(df.index),
        fits={"all": fit},
    )


def rcat_expanding(
    df: pd.DataFrame,
    dependent: str,
    regressors: Sequence[str],
    min_history: int = 16,
    transform: Callable[[pd.DataFrame], pd.DataFrame] | None = None,
    firm: str = "firm_id",
    quarter: str = "year_quarter",
) -> RcatResult:
    """Expanding-sample residuals, one refit per year-quarter.

    The events of quarter Q get their residual (and explained part, fixed
    effects included) from a fit on every event dated up to and including Q.
    The first ``min_history`` quarters only feed later fits. ``transform``
    (winsorization and derived columns) is applied to each expanding sample
    separately so no bound depends on later events.
    """
    quarters = sorted(df[quarter].dropna().unique())
    resid = pd.Series(np.nan, index=df.index)
    explained = pd.Series(np.nan, index=df.index)
    fits = {}
    for q in quarters[min_history:]:
        sample = df.loc[df[quarter] <= q]
        assert sample[quarter].max() <= q, "look-ahead in expanding sample"
        if transform is not None:
            sample = transform(sample)
        table = PanelTable.from_frame(sample, dependent, regressors, firm=firm, quarter=quarter)
        fit = fe_ols(table, cov_type=None)
        cur = sample.loc[table.index, quarter].to_numpy() == q
        resid.loc[table.index[cur]] = fit.residuals[cur]
        explained.loc[table.index[cur]] = fit.fitted[cur]
        fits[q] = fit
    return RcatResult(rcat=resid, explained=explained, fits=fits)


# ---------------------------------------------------------------------------
# per-article contributions


@dataclass(frozen=True)
class ArticleTone:
    doc_id: str
    tau: int
    tone: float
    source_type: str


def ratc(doc_tone: float, fit: NormalToneFit, factor: float, n_docs_day: int, explained: float, n_docs_window: int) -> float:
    """Article share of residual tone: its abnormal tone over the day's article count
    minus an equal per-article share of the explained part."""
    if n_docs_day < 1 or n_docs_window < 1:
        raise ValidationError("article counts must be positive")
    return atone(doc_tone, fit, factor) / n_docs_day - explained / n_docs_window


def event_ratc(
    articles: Iterable[ArticleTone],
    factor: Mapping[int, float],
    fit: NormalToneFit,
    explained: float,
    window: tuple[int, int] = WINDOWS["event"],
) -> list[tuple[ArticleTone, float]]:
    """Contribution of every article in the window; they sum to CAT minus ``explained``."""
    a, b = window
    inside = [
        art for art in articles
        if a <= art.tau <= b and art.tau in factor and np.isfinite(factor[art.tau]) and np.isfinite(art.tone)
    ]
    if not inside:
        raise EmptyWindow(f"no articles in window {window}")
    per_day: dict[int, int] = defaultdict(int)
    for art in inside:
        per_day[art.tau] += 1
    total = len(inside)
    inside.sort(key=lambda r: (r.tau, r.doc_id))
    return [(art, ratc(art.tone, fit, factor[art.tau], per_day[art.tau], explained, total)) for art in inside]


def split_rcat_by_source(contributions: Iterable[tuple[ArticleTone, float]]) -> tuple[float, float]:
    """(newswire, newspaper and web) sums of article contributions."""
    nw = npw = 0.0
    for art, v in contributions:
        if art.source_type == NEWSWIRE:
            nw += v
        else:
            npw += v
    return nw, npw
