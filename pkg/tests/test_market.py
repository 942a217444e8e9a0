from datetime import date

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from mediatone.errors import EmptyWindow, InsufficientObservations, MissingVolume, NonpositivePrice, ValidationError
from mediatone.market import (
    build_market_events,
    car,
    cast,
    fit_market_model,
    median_forecast,
    read_earnings,
    read_prices,
    realign_event_date,
    roa,
    share_turnover,
    sue,
    winsorize,
    year_quarter,
)
from mediatone.oracles import oracle_masked_sum, oracle_quantile
from mediatone.trading_calendar import TradingCalendar

from conftest import weekday_calendar


@pytest.mark.parametrize(
    "eps,mfor,price,expected",
    [(0.61, 0.61, 20.0, 0.0), (0.71, 0.61, 27.0, 0.0037037), (0.50, 0.61, 25.0, -0.0044)],
)
def test_sue_examples(eps, mfor, price, expected):
    assert sue(eps, mfor, price) == pytest.approx(expected, abs=5e-8)


@pytest.mark.parametrize("price", [0.0, -1.0, float("nan")])
def test_sue_rejects_bad_price(price):
    with pytest.raises(NonpositivePrice):
        sue(1.0, 0.5, price)


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.5, 500), st.floats(0.01, 100))
def test_sue_scale_consistent(eps, mfor, price, c):
    # a stock split rescales every per-share quantity alike
    assert sue(c * eps, c * mfor, c * price) == pytest.approx(sue(eps, mfor, price), rel=1e-9, abs=1e-12)


def test_median_forecast_latest_per_analyst_within_90_days():
    ann = date(2005, 7, 20)
    fc = [
        ("a", date(2005, 5, 1), 0.50), ("a", date(2005, 7, 1), 0.60),  # latest kept
        ("b", date(2005, 6, 1), 0.70),
        ("c", date(2005, 3, 1), 9.00),  # older than 90 days
        ("d", ann, 5.00),  # same day excluded
        ("e", date(2005, 7, 19), 0.65),
    ]
    assert median_forecast(fc, ann) == pytest.approx(0.65)
    assert np.isnan(median_forecast([], ann))


def test_roa_uses_prior_assets():
    assert roa(2.0, 100.0) == 0.02
    assert np.isnan(roa(2.0, 0.0))


def test_year_quarter():
    assert year_quarter(date(2007, 3, 31)) == "2007Q1"
    assert year_quarter(date(2007, 10, 1)) == "2007Q4"


# ---------------------------------------------------------------- realignment

def _vols(cal, ann, values):
    i = cal.index(ann)
    return {cal.dates[i + k]: v for k, v in zip((-1, 0, 1), values)}


@pytest.mark.parametrize(
    "values,offset",
    [((10, 50, 20), 0), ((50, 10, 20), -1), ((10, 10, 10), 0), ((30, 10, 30), -1), ((5, 30, 30), 0), ((1, 2, 3), 1)],
)
def test_realign_rule(values, offset):
    cal = weekday_calendar(date(2005, 1, 3), 20)
    ann = cal.dates[10]
    assert realign_event_date(ann, _vols(cal, ann, values), cal) == cal.dates[10 + offset]


def test_realign_weekend_and_missing():
    cal = weekday_calendar(date(2005, 1, 3), 20)
    sat = date(2005, 1, 8)
    mon = date(2005, 1, 10)
    assert realign_event_date(sat, _vols(cal, mon, (1, 1, 9)), cal) == date(2005, 1, 11)
    with pytest.raises(MissingVolume):
        realign_event_date(mon, {mon: 1.0}, cal)
    with pytest.raises(MissingVolume):
        realign_event_date(cal.dates[0], {d: 1.0 for d in cal.dates}, cal)


# ---------------------------------------------------------------- CAR and CAST

def _returns(seed=0, lo=-35, hi=20):
    rng = np.random.default_rng(seed)
    mkt = {t: float(rng.normal(0, 0.01)) for t in range(lo, hi + 1)}
    return mkt, rng


def test_car_zero_when_return_equals_market():
    mkt, _ = _returns()
    fit = fit_market_model(mkt, mkt)
    assert (fit.alpha, fit.beta) == (pytest.approx(0.0, abs=1e-12), pytest.approx(1.0))
    assert car(mkt, mkt, (-1, 1)) == pytest.approx(0.0, abs=1e-12)


def test_planted_abnormal_return():
    mkt, _ = _returns(1)
    ret = {t: 0.001 + 1.2 * m for t, m in mkt.items()}
    ret[0] += 0.01
    assert car(ret, mkt, (-1, 1)) == pytest.approx(0.01, abs=1e-12)
    assert car(ret, mkt, (2, 20)) == pytest.approx(0.0, abs=1e-12)


def test_car_additive_over_adjacent_windows():
    mkt, rng = _returns(2)
    ret = {t: 0.5 * m + float(rng.normal(0, 0.01)) for t, m in mkt.items() if rng.random() < 0.9}
    whole = car(ret, mkt, (-5, 20))
    assert whole == pytest.approx(car(ret, mkt, (-5, 1)) + car(ret, mkt, (2, 20)), abs=1e-12)


def test_car_needs_ten_estimation_days():
    mkt, _ = _returns()
    ret = {t: v for t, v in mkt.items() if t >= -14}  # nine estimation days
    with pytest.raises(InsufficientObservations):
        car(ret, mkt, (-1, 1))


@pytest.mark.parametrize("vol,shares,expected", [(100, 100, 0.0), (200, 100, np.log(2)), (50, 100, -np.log(2))])
def test_share_turnover(vol, shares, expected):
    assert share_turnover(vol, shares) == pytest.approx(expected, abs=1e-12)


def test_share_turnover_zero_volume_missing():
    assert np.isnan(share_turnover(0, 100))
    with pytest.raises(ValidationError):
        share_turnover(10, 0)


def test_cast_examples():
    base = {t: -4.0 for t in range(-35, 21)}
    assert cast(base, (-1, 1)) == 0.0
    bumped = dict(base)
    for t in (-1, 0, 1):
        bumped[t] += 0.1
    assert cast(bumped, (-1, 1)) == pytest.approx(0.3)


def test_cast_masked_days_match_masked_sum():
    rng = np.random.default_rng(5)
    st_ = {t: float(rng.normal()) for t in range(-35, 21) if rng.random() < 0.8}
    mu = np.mean([v for t, v in st_.items() if -35 <= t <= -6])
    ref = oracle_masked_sum({t: v - mu for t, v in st_.items()}, 2, 20)
    assert cast(st_, (2, 20)) == pytest.approx(ref, abs=1e-12)
    with pytest.raises(EmptyWindow):
        cast({t: 1.0 for t in range(-35, -5)}, (-1, 1))


# ---------------------------------------------------------------- winsorize

def test_winsorize_one_to_hundred():
    x = np.arange(1, 101, dtype=float)
    w = winsorize(x)
    assert w[0] == pytest.approx(oracle_quantile(x, 0.01)) == pytest.approx(1.99)
    assert w[-1] == pytest.approx(oracle_quantile(x, 0.99)) == pytest.approx(99.01)
    assert_allclose(w[1:-1], x[1:-1])


def test_winsorize_trivial_cases():
    assert_allclose(winsorize([3.0] * 10), [3.0] * 10)
    x = np.random.default_rng(0).normal(size=50)
    assert_allclose(winsorize(x, 0.0, 1.0), x)
    w = winsorize(np.r_[x, np.nan])
    assert np.isnan(w[-1])
    with pytest.raises(ValidationError):
        winsorize([1.0, np.nan])


def _vectors(sizes):
    return sizes.flatmap(lambda n: arrays(np.float64, n, elements=st.floats(-1e6, 1e6)))


@settings(max_examples=200, deadline=None)
@given(_vectors(st.integers(2, 80)))
def test_winsorize_monotone(x):
    w = winsorize(x)
    order = np.argsort(x, kind="stable")
    assert np.all(np.diff(w[order]) >= 0)


@settings(max_examples=100, deadline=None)
@given(_vectors(st.sampled_from([101, 201, 301])))
def test_winsorize_idempotent_on_integral_positions(x):
    # both cut points land on order statistics when 0.01 * (n - 1) is whole
    w = winsorize(x)
    assert_allclose(winsorize(w), w, rtol=0, atol=1e-9 * (1 + np.abs(x).max()))


@settings(max_examples=200, deadline=None)
@given(_vectors(st.integers(2, 80)))
def test_rewinsorize_drift_bounded(x):
    # off the integral positions a second pass moves the cut by frac * (1 - frac) * gap
    w = winsorize(x)
    v = np.sort(x)
    n = len(v)
    bound = 0.0
    for q in (0.01, 0.99):
        pos = q * (n - 1)
        i = int(np.floor(pos))
        frac = pos - i
        bound = max(bound, frac * (1 - frac) * (v[min(i + 1, n - 1)] - v[i]))
    assert np.abs(winsorize(w) - w).max() <= bound + 1e-9 * (1 + np.abs(x).max())


# ---------------------------------------------------------------- event table

def test_build_market_events_on_synthetic_files(small_market):
    out, _ = small_market
    cal = TradingCalendar.from_csv(out / "calendar.csv")
    prices, earnings = read_prices(out / "prices.csv"), read_earnings(out / "earnings.csv")
    events, paths, attr = build_market_events(prices, earnings, cal)
    assert attr["input"] == len(earnings)
    assert attr["input"] == sum(v for k, v in attr.items() if k != "input")
    assert attr["retained"] == len(events) > 0
    assert events.event_id.is_unique
    assert set(paths.tau) == set(range(-5, 21))
    # window sums agree with the stored abnormal return path
    p = paths.loc[paths.event_id == events.event_id.iloc[0]].set_index("tau")["ar"]
    assert events.car_event.iloc[0] == pytest.approx(p.loc[-1:1].sum())
