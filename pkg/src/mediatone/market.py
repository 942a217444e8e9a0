"""Earnings surprise, event-date realignment, abnormal returns and abnormal turnover."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import pandas as pd

from .abnormal import WINDOWS, estimation_window, line_fit, paired
from .errors import (
    EmptyWindow,
    InsufficientObservations,
    MissingVolume,
    NonpositivePrice,
    ValidationError,
)
from .trading_calendar import TradingCalendar

log = logging.getLogger(__name__)

FORECAST_MAX_AGE = 90


def sue(eps: float, mfor: float, price: float) -> float:
    """Standardized unexpected earnings, (eps - mfor) / price."""
    if not price > 0:
        raise NonpositivePrice(f"price must be positive, got {price}")
    return (eps - mfor) / price


def median_forecast(forecasts: Iterable[tuple[str, date, float]], announced: date, max_age: int = FORECAST_MAX_AGE) -> float:
    """Median over analysts of each analyst's latest forecast issued within
    ``max_age`` calendar days before the announcement (same-day forecasts excluded)."""
    latest: dict[str, tuple[date, float]] = {}
    earliest = announced - timedelta(days=max_age)
    for analyst, d, value in forecasts:
        if earliest <= d < announced:
            if analyst not in latest or d > latest[analyst][0]:
                latest[analyst] = (d, value)
    if not latest:
        return float("nan")
    return float(np.median([v for _, v in latest.values()]))


def roa(net_income: float, prior_assets: float) -> float:
    """Quarterly return on assets: net income over the previous quarter's total assets."""
    if not prior_assets > 0:
        return float("nan")
    return net_income / prior_assets


def realign_event_date(announced: date, volumes: Mapping[date, float], calendar: TradingCalendar) -> date:
    """Highest-volume trading day among the day before, the day of and the day
    after the announcement.

    An announcement on a non-trading day is first moved to the next trading
    day. Ties go to the announced day when it is among the maxima, else to
    the earliest tied day.
    """
    d0 = calendar.roll_forward(announced)
    if d0 is None:
        raise MissingVolume(f"{announced} is past the calendar")
    days = [calendar.shift(d0, -1), d0, calendar.shift(d0, 1)]
    if any(d is None for d in days):
        raise MissingVolume(f"three-day window around {d0} leaves the calendar")
    vols = []
    for d in days:
        v = volumes.get(d)
        if v is None or not np.isfinite(v):
            raise MissingVolume(f"no volume on {d}")
        vols.append(float(v))
    top = max(vols)
    if vols[1] == top:
        return d0
    return days[vols.index(top)]


@dataclass
class MarketModelFit:
    alpha: float
    beta: float
    n_obs: int
    degenerate: bool = False


def fit_market_model(
    returns: Mapping[int, float],
    market: Mapping[int, float],
    L: int = 30,
    K: int = 5,
    min_obs: int = 10,
) -> MarketModelFit:
    lo, hi = estimation_window(L, K)
    taus, x, y = paired(returns, market, lo, hi)
    if len(taus) < min_obs:
        raise InsufficientObservations(f"{len(taus)} return days in the estimation window, need {min_obs}")
    alpha, beta, degenerate = line_fit(x, y)
    return MarketModelFit(alpha, beta, len(taus), degenerate)


def abnormal_returns(
    returns: Mapping[int, float],
    market: Mapping[int, float],
    fit: MarketModelFit,
    start: int = -5,
    end: int = 20,
) -> dict[int, float]:
    taus, x, y = paired(returns, market, start, end)
    return dict(zip(taus, (y - fit.alpha - fit.beta * x).tolist()))


def window_sum(series: Mapping[int, float], tau1: int, tau2: int) -> float:
    vals = [v for t, v in series.items() if tau1 <= t <= tau2 and np.isfinite(v)]
    if not vals:
        raise EmptyWindow(f"no observations in window ({tau1}, {tau2})")
    return float(sum(vals))


def car(
    returns: Mapping[int, float],
    market: Mapping[int, float],
    window: tuple[int, int],
    L: int = 30,
    K: int = 5,
    min_obs: int = 10,
) -> float:
    """Cumulative market-model abnormal return over ``window``."""
    fit = fit_market_model(returns, market, L, K, min_obs)
    return window_sum(abnormal_returns(returns, market, fit, window[0], window[1]), *window)


def share_turnover(volume: float, shares: float) -> float:
    """log(volume / shares outstanding); NaN when nothing traded."""
    if not shares > 0:
        raise ValidationError(f"shares outstanding must be positive, got {shares}")
    if not volume > 0:
        return float("nan")
    return float(np.log(volume / shares))


def abnormal_turnover(
    turnover: Mapping[int, float],
    L: int = 30,
    K: int = 5,
    min_obs: int = 10,
    start: int = -5,
    end: int = 20,
) -> dict[int, float]:
    """Turnover minus its estimation-window mean."""
    lo, hi = estimation_window(L, K)
    base = [v for t, v in turnover.items() if lo <= t <= hi and np.isfinite(v)]
    if len(base) < min_obs:
        raise InsufficientObservations(f"{len(base)} turnover days in the estimation window, need {min_obs}")
    mu = float(np.mean(base))
    return {t: v - mu for t, v in sorted(turnover.items()) if start <= t <= end and np.isfinite(v)}


def cast(turnover: Mapping[int, float], window: tuple[int, int], L: int = 30, K: int = 5, min_obs: int = 10) -> float:
    return window_sum(abnormal_turnover(turnover, L, K, min_obs, window[0], window[1]), *window)


def winsorize(values, lo: float = 0.01, hi: float = 0.99) -> np.ndarray:
    """Clip to the ``lo`` and ``hi`` empirical quantiles of the finite values.

    Quantiles interpolate linearly between order statistics (position
    ``q * (n - 1)``). NaNs pass through.
    """
    x = np.asarray(values, dtype=float)
    finite = x[np.isfinite(x)]
    if finite.size < 2:
        raise ValidationError("winsorize needs at least two finite values")
    qlo, qhi = np.quantile(finite, [lo, hi], method="linear")
    return np.where(np.isfinite(x), np.clip(x, qlo, qhi), x)


def year_quarter(d: date) -> str:
    return f"{d.year}Q{(d.month - 1) // 3 + 1}"


# ---------------------------------------------------------------------------
# event table


def read_prices(path: str | Path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"firm": str}, float_precision="round_trip")
    df["date"] = pd.to_datetime(df["date"]).dt.date
    return df


def read_earnings(path: str | Path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"firm": str}, float_precision="round_trip")
    df["announce_date"] = pd.to_datetime(df["announce_date"]).dt.date
    return df


def _relative(values: Mapping[date, float], event: date, calendar: TradingCalendar, lo: int, hi: int) -> dict[int, float]:
    t0 = calendar.index(event)
    out = {}
    for tau in range(lo, hi + 1):
        i = t0 + tau
        if 0 <= i < len(calendar.dates):
            v = values.get(calendar.dates[i])
            if v is not None and np.isfinite(v):
                out[tau] = float(v)
    return out


def event_id(firm: str, announced: date) -> str:
    return f"{firm}:{announced.isoformat()}"


def build_market_events(
    prices: pd.DataFrame,
    earnings: pd.DataFrame,
    calendar: TradingCalendar,
    L: int = 30,
    K: int = 5,
    min_obs: int = 10,
    windows: Mapping[str, tuple[int, int]] = WINDOWS,
    path_range: tuple[int, int] = (-5, 20),
) -> tuple[pd.DataFrame, pd.DataFrame, dict[str, int]]:
    """Per-event market measures and long-format abnormal return and turnover paths.

    Returns ``(events, paths, attrition)``. Events failing realignment or the
    estimation-window minimum are counted in ``attrition`` and left out.
    """
    lo = -L - K
    hi = max(path_range[1], max(b for _, b in windows.values()))
    by_firm = {f: g for f, g in prices.groupby("firm", sort=True)}
    attrition = {"input": 0, "missing_prices": 0, "missing_volume": 0, "insufficient_returns": 0,
                 "insufficient_turnover": 0, "nonpositive_price": 0}
    rows, path_rows = [], []
    for rec in earnings.sort_values(["firm", "announce_date"]).itertuples(index=False):
        attrition["input"] += 1
        g = by_firm.get(rec.firm)
        if g is None:
            attrition["missing_prices"] += 1
            continue
        vol = dict(zip(g["date"], g["volume"].astype(float)))
        try:
            d_event = realign_event_date(rec.announce_date, vol, calendar)
        except MissingVolume:
            attrition["missing_volume"] += 1
            continue
        ret = _relative(dict(zip(g["date"], g["return"])), d_event, calendar, lo, hi)
        mkt = _relative(dict(zip(g["date"], g["market_return"])), d_event, calendar, lo, hi)
        st_dates = {
            d: share_turnover(v, c) for d, v, c in zip(g["date"], g["volume"].astype(float), g["shares"].astype(float))
        }
        st = _relative(st_dates, d_event, calendar, lo, hi)
        try:
            mfit = fit_market_model(ret, mkt, L, K, min_obs)
        except InsufficientObservations:
            attrition["insufficient_returns"] += 1
            continue
        try:
            ast = abnormal_turnover(st, L, K, min_obs, path_range[0], hi)
        except InsufficientObservations:
            attrition["insufficient_turnover"] += 1
            continue
        try:
            s = sue(rec.eps, rec.median_forecast, rec.qend_price)
        except NonpositivePrice:
            attrition["nonpositive_price"] += 1
            continue
        ar = abnormal_returns(ret, mkt, mfit, path_range[0], hi)
        eid = event_id(rec.firm, rec.announce_date)
        row = {
            "event_id": eid,
            "firm_id": rec.firm,
            "announce_date": rec.announce_date.isoformat(),
            "event_date": d_event.isoformat(),
            "year_quarter": year_quarter(d_event),
            "sue": s,
            "roa": float(rec.roa),
            "log_bm": float(np.log(rec.book / rec.mcap)) if rec.book > 0 and rec.mcap > 0 else np.nan,
            "log_m": float(np.log(rec.mcap)) if rec.mcap > 0 else np.nan,
        }
        for name, (a, b) in windows.items():
            row[f"car_{name}"] = _safe_sum(ar, a, b)
            row[f"cast_{name}"] = _safe_sum(ast, a, b)
        rows.append(row)
        for tau in range(path_range[0], path_range[1] + 1):
            path_rows.append((eid, tau, ar.get(tau, np.nan), ast.get(tau, np.nan)))
    attrition["retained"] = len(rows)
    events = pd.DataFrame(rows)
    paths = pd.DataFrame(path_rows, columns=["event_id", "tau", "ar", "ast"])
    return events, paths, attrition


def _safe_sum(series: Mapping[int, float], a: int, b: int) -> float:
    try:
        return window_sum(series, a, b)
    except EmptyWindow:
        return float("nan")
