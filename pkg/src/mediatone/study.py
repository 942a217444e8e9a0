"""Event assembly, residual tone, bucketing and the regression tables."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from datetime import date
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .abnormal import (
    WINDOWS,
    ArticleTone,
    NormalToneFit,
    cat_windows,
    event_ratc,
    fit_normal_tone,
    atone_series,
    rcat_expanding,
    split_rcat_by_source,
)
from .errors import EmptyWindow, InsufficientData, InsufficientObservations, InvalidConfig, TooFewEvents
from .market import winsorize
from .panel import PanelFit, PanelTable, fe_ols, wald_equal
from .tone import DocTone, FactorSeries, ToneSeries
from .trading_calendar import TradingCalendar

log = logging.getLogger(__name__)

WINDOW_BUDGET = 61


@dataclass
class StudyConfig:
    L: int = 30
    K: int = 5
    windows: dict[str, tuple[int, int]] = field(default_factory=lambda: dict(WINDOWS))
    min_tone_obs: int = 10
    winsor: tuple[float, float] = (0.01, 0.99)
    dedup_threshold: float = 0.9
    min_days: int = 200
    seed: int = 1
    rcat_min_history: int = 16
    release_tolerance: int = 1
    equal_weight: bool = False
    path_range: tuple[int, int] = (-5, 20)

    def __post_init__(self):
        self.windows = {k: tuple(v) for k, v in self.windows.items()}
        self.winsor = tuple(self.winsor)
        self.path_range = tuple(self.path_range)
        self.validate()

    @property
    def long_end(self) -> int:
        return max(b for _, b in self.windows.values())

    @property
    def span(self) -> int:
        """Trading days from the estimation-window start through the longest window's end, inclusive."""
        return self.L + self.K + self.long_end + 1

    def validate(self) -> None:
        if self.L < 1 or self.K < 1:
            raise InvalidConfig("L and K must be positive")
        if self.span > WINDOW_BUDGET:
            raise InvalidConfig(f"estimation and event windows span {self.span} > {WINDOW_BUDGET} trading days")
        if self.min_tone_obs > self.L:
            raise InvalidConfig("min_tone_obs exceeds the estimation window length")
        for name in ("pre", "event", "short", "long"):
            if name not in self.windows:
                raise InvalidConfig(f"missing window {name!r}")
        for name, (a, b) in self.windows.items():
            if a > b or a < -self.K:
                raise InvalidConfig(f"window {name} = ({a}, {b}) is invalid or overlaps the estimation window")
        lo, hi = self.winsor
        if not 0 <= lo < hi <= 1:
            raise InvalidConfig("winsor bounds must satisfy 0 <= lo < hi <= 1")
        if not 0 < self.dedup_threshold <= 1:
            raise InvalidConfig("dedup_threshold must be in (0, 1]")

    @classmethod
    def from_json(cls, path: str | Path) -> "StudyConfig":
        data = json.loads(Path(path).read_text())
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["windows"] = {k: list(v) for k, v in self.windows.items()}
        return d


# ---------------------------------------------------------------------------
# events


EVENT_FILTERS = ("no_event_tone", "insufficient_estimation_tone", "missing_press_release", "missing_call")


@dataclass
class EventContext:
    """Per-event intermediate state needed for article contributions."""

    fit: NormalToneFit
    factor: dict[int, float]
    articles: list[ArticleTone]


@dataclass
class EventSet:
    events: pd.DataFrame
    paths: pd.DataFrame
    contexts: dict[str, EventContext]
    attrition: dict[str, int]


def _relative_index(d: date, calendar: TradingCalendar) -> int | None:
    return calendar._pos.get(d)


def _match_release(rel: pd.DataFrame, t0: int, calendar: TradingCalendar, tol: int) -> pd.Series | None:
    """Release closest to the event day within ``tol`` trading days, earliest on ties."""
    best, best_key = None, None
    for _, row in rel.iterrows():
        i = _relative_index(row["date"], calendar)
        if i is None or abs(i - t0) > tol:
            continue
        key = (abs(i - t0), i, row["doc_id"])
        if best_key is None or key < best_key:
            best, best_key = row, key
    return best


def build_events(
    market_events: pd.DataFrame,
    tones: Mapping[str, ToneSeries],
    factor: FactorSeries,
    releases: pd.DataFrame,
    doc_tones: Sequence[DocTone],
    calendar: TradingCalendar,
    cfg: StudyConfig | None = None,
) -> EventSet:
    """Qualifying events with abnormal tone, CAT windows and disclosure tones.

    An event is kept when it has tone on day -1, 0 or +1, at least
    ``min_tone_obs`` tone days in the estimation window, and both a press
    release and a call transcript with LM and GWP tones within
    ``release_tolerance`` trading days. Each dropped event is counted once,
    under the first filter it fails. ``window_overlap`` flags events whose
    estimation window starts before the previous kept event of the same
    firm has left its longest window.
    """
    cfg = cfg or StudyConfig()
    lo = -cfg.L - cfg.K
    hi = max(cfg.long_end, cfg.path_range[1])
    attrition = {"input": 0, **{k: 0 for k in EVENT_FILTERS}}
    rel_by_key: dict[tuple[str, str], pd.DataFrame] = {}
    if len(releases):
        ok = releases["lm_tone"].notna() & releases["gwp_tone"].notna()
        for (firm, kind), g in releases.loc[ok].groupby(["firm_id", "kind"], sort=True):
            rel_by_key[(firm, kind)] = g
    arts_by_firm: dict[str, list[DocTone]] = defaultdict(list)
    for dt in doc_tones:
        arts_by_firm[dt.firm_id].append(dt)

    rows, path_rows, contexts = [], [], {}
    last_end: dict[str, int] = {}
    ordered = market_events.sort_values(["firm_id", "event_date", "event_id"]) if len(market_events) else market_events
    for ev in ordered.itertuples(index=False):
        attrition["input"] += 1
        d0 = date.fromisoformat(ev.event_date) if isinstance(ev.event_date, str) else ev.event_date
        t0 = calendar.index(d0)

        def rel(values: Mapping[date, float]) -> dict[int, float]:
            out = {}
            for tau in range(lo, hi + 1):
                i = t0 + tau
                if 0 <= i < len(calendar.dates):
                    v = values.get(calendar.dates[i])
                    if v is not None:
                        out[tau] = v
            return out

        ts = tones.get(ev.firm_id)
        tone_rel = rel(ts.tones()) if ts is not None else {}
        if not any(t in tone_rel for t in (-1, 0, 1)):
            attrition["no_event_tone"] += 1
            continue
        fac_rel = rel(factor.values)
        try:
            fit = fit_normal_tone(tone_rel, fac_rel, cfg.L, cfg.K, cfg.min_tone_obs)
        except InsufficientObservations:
            attrition["insufficient_estimation_tone"] += 1
            continue
        pr = _match_release(rel_by_key.get((ev.firm_id, "earnings_press_release"), pd.DataFrame()), t0, calendar,
                            cfg.release_tolerance)
        if pr is None:
            attrition["missing_press_release"] += 1
            continue
        ec = _match_release(rel_by_key.get((ev.firm_id, "earnings_call_transcript"), pd.DataFrame()), t0, calendar,
                            cfg.release_tolerance)
        if ec is None:
            attrition["missing_call"] += 1
            continue

        at = atone_series(tone_rel, fac_rel, fit, start=-cfg.K, end=hi)
        cats = cat_windows(at, cfg.windows)
        overlap = ev.firm_id in last_end and t0 + lo <= last_end[ev.firm_id]
        last_end[ev.firm_id] = t0 + cfg.long_end
        row = dict(ev._asdict())
        row.update({f"cat_{k}": v for k, v in cats.items()})
        row.update({
            "epr_lm": float(pr["lm_tone"]), "epr_gwp": float(pr["gwp_tone"]),
            "ec_lm": float(ec["lm_tone"]), "ec_gwp": float(ec["gwp_tone"]),
            "normal_alpha": fit.alpha, "normal_beta": fit.beta, "normal_n": fit.n_obs,
            "degenerate_factor": fit.degenerate, "window_overlap": bool(overlap),
        })
        rows.append(row)

        running, seen = 0.0, False
        for tau in range(cfg.path_range[0], cfg.path_range[1] + 1):
            if tau in at:
                running += at[tau]
                seen = True
            path_rows.append((ev.event_id, tau, at.get(tau, np.nan), running if seen else np.nan))

        articles = []
        for dt in arts_by_firm.get(ev.firm_id, ()):
            i = _relative_index(dt.date, calendar)
            if i is not None and lo <= i - t0 <= hi:
                articles.append(ArticleTone(dt.doc_id, i - t0, dt.tone, dt.source_type))
        contexts[ev.event_id] = EventContext(fit, fac_rel, articles)

    attrition["retained"] = len(rows)
    events = pd.DataFrame(rows)
    paths = pd.DataFrame(path_rows, columns=["event_id", "tau", "atone", "cat"])
    return EventSet(events, paths, contexts, attrition)


# ---------------------------------------------------------------------------
# controls and residual tone

WINSORIZED = ("sue", "roa", "log_m", "log_bm")

T3_EVENT = ["sue", "sue_neg", "sue_x_neg", "epr_lm", "epr_gwp", "ec_lm", "ec_gwp", "cat_pre", "car_pre",
            "roa", "log_bm", "log_m"]
T3_POST = ["sue", "sue_neg", "sue_x_neg", "epr_lm", "epr_gwp", "ec_lm", "ec_gwp", "cat_pre", "cat_event",
           "car_event", "roa", "log_bm", "log_m"]
_CAR_TAIL_EVENT = ["sue", "sue_neg", "sue_x_neg", "epr_lm", "epr_gwp", "ec_lm", "ec_gwp", "car_pre",
                   "roa", "log_bm", "log_m"]
_CAR_TAIL_POST = ["sue", "sue_neg", "sue_x_neg", "epr_lm", "epr_gwp", "ec_lm", "ec_gwp", "car_event",
                  "roa", "log_bm", "log_m"]
_CAST_TAIL = ["sue", "sue_neg", "sue_x_neg", "abs_epr_lm", "abs_epr_gwp", "abs_ec_lm", "abs_ec_gwp", "cast_pre",
              "abs_car_pre", "abs_roa", "log_bm", "log_m"]

# (dependent, regressors) per column, regressors in the published row order
TABLE_SPECS: dict[str, list[tuple[str, list[str]]]] = {
    "T3": [("cat_event", T3_EVENT), ("cat_short", T3_POST), ("cat_long", T3_POST)],
    "T4": [
        ("car_event", ["rcat"] + _CAR_TAIL_EVENT),
        ("car_short", ["rcat"] + _CAR_TAIL_POST),
        ("car_long", ["rcat"] + _CAR_TAIL_POST),
    ],
    "T5": [
        ("car_event", ["nwrcat", "nprcat"] + _CAR_TAIL_EVENT),
        ("car_short", ["nwrcat", "nprcat"] + _CAR_TAIL_POST),
        ("car_long", ["nwrcat", "nprcat"] + _CAR_TAIL_POST),
    ],
    "T6": [
        ("cast_event", ["abs_rcat"] + _CAST_TAIL),
        ("cast_event", ["abs_nwrcat", "abs_nprcat"] + _CAST_TAIL),
    ],
}
WALD_PAIRS = {"T5": ("nwrcat", "nprcat"), "T6": ("abs_nwrcat", "abs_nprcat")}
RCAT_REGRESSORS = T3_EVENT

LABELS = {
    "rcat": "RCAT(-1,1)", "nwrcat": "NWRCAT(-1,1)", "nprcat": "NPRCAT(-1,1)",
    "abs_rcat": "|RCAT(-1,1)|", "abs_nwrcat": "|NWRCAT(-1,1)|", "abs_nprcat": "|NPRCAT(-1,1)|",
    "sue": "SUE", "sue_neg": "I[SUE<0]", "sue_x_neg": "SUE x I[SUE<0]",
    "epr_lm": "EPRLM", "epr_gwp": "EPRGWP", "ec_lm": "ECLM", "ec_gwp": "ECGWP",
    "abs_epr_lm": "|EPRLM|", "abs_epr_gwp": "|EPRGWP|", "abs_ec_lm": "|ECLM|", "abs_ec_gwp": "|ECGWP|",
    "cat_pre": "CAT(-5,-2)", "cat_event": "CAT(-1,1)", "cat_short": "CAT(2,5)", "cat_long": "CAT(2,20)",
    "car_pre": "CAR(-5,-2)", "car_event": "CAR(-1,1)", "car_short": "CAR(2,5)", "car_long": "CAR(2,20)",
    "abs_car_pre": "|CAR(-5,-2)|", "cast_pre": "CAST(-5,-2)", "cast_event": "CAST(-1,1)",
    "roa": "ROA", "abs_roa": "|ROA|", "log_bm": "log(B/M)", "log_m": "log(M)",
}


def prepare_controls(df: pd.DataFrame, bounds: tuple[float, float] = (0.01, 0.99)) -> pd.DataFrame:
    """Winsorize the level controls on this sample, then add indicator, interaction and absolute columns."""
    out = df.copy()
    for c in WINSORIZED:
        if c in out and out[c].notna().sum() >= 2:
            out[c] = winsorize(out[c].to_numpy(float), *bounds)
    if "sue" in out:
        out["sue_neg"] = (out["sue"] < 0).astype(float).where(out["sue"].notna())
        out["sue_x_neg"] = out["sue"] * out["sue_neg"]
    for c in ("epr_lm", "epr_gwp", "ec_lm", "ec_gwp", "car_pre", "roa", "rcat", "nwrcat", "nprcat"):
        if c in out:
            out[f"abs_{c}"] = out[c].abs()
    return out


def residualize(
    es: EventSet,
    cfg: StudyConfig | None = None,
    window: str = "event",
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Add RCAT, its explained part and the source split; return (events, article contributions).

    RCAT of the chosen CAT window comes from the expanding quarterly panel
    fit. Article contributions use the same explained part, so they add up
    to RCAT event by event.
    """
    cfg = cfg or StudyConfig()
    ev = es.events.copy()
    if ev.empty:
        return ev, pd.DataFrame(columns=["event_id", "doc_id", "tau", "source_type", "ratc"])
    dep = f"cat_{window}"
    res = rcat_expanding(
        ev, dep, RCAT_REGRESSORS, min_history=cfg.rcat_min_history,
        transform=lambda s: prepare_controls(s, cfg.winsor),
    )
    ev["rcat"] = res.rcat
    ev["explained"] = res.explained
    ev["nwrcat"] = np.nan
    ev["nprcat"] = np.nan
    ratc_rows = []
    a, b = cfg.windows[window]
    for i, row in ev.iterrows():
        if not np.isfinite(row["rcat"]):
            continue
        ctx = es.contexts[row["event_id"]]
        try:
            contrib = event_ratc(ctx.articles, ctx.factor, ctx.fit, row["explained"], (a, b))
        except EmptyWindow:
            continue
        nw, npw = split_rcat_by_source(contrib)
        ev.at[i, "nwrcat"] = nw
        ev.at[i, "nprcat"] = npw
        for art, v in contrib:
            ratc_rows.append((row["event_id"], art.doc_id, art.tau, art.source_type, v))
    ratc = pd.DataFrame(ratc_rows, columns=["event_id", "doc_id", "tau", "source_type", "ratc"])
    return ev, ratc


# ---------------------------------------------------------------------------
# buckets and curves


@dataclass
class BucketSpec:
    variable: str
    scheme: str = "quantile"  # or "sign_conditional"
    n: int = 5
    sign_variable: str = "sue"
    absolute: bool = False

    def labels(self) -> list[str]:
        if self.scheme == "quantile":
            return [f"#{i}" for i in range(1, self.n + 1)]
        return [f"SUE{s} #{i}" for s in ("<0", ">=0") for i in range(1, self.n + 1)]


def rank_buckets(values: np.ndarray, keys: Sequence[str], n: int) -> np.ndarray:
    """Bucket 1..n by rank: sort by (value, key), bucket = floor(rank * n / count) + 1.

    Bucket sizes differ by at most one and ties are split by key order.
    """
    m = len(values)
    if m < n:
        raise TooFewEvents(f"{m} events for {n} buckets")
    order = sorted(range(m), key=lambda i: (values[i], keys[i]))
    out = np.empty(m, dtype=int)
    for rank, i in enumerate(order):
        out[i] = rank * n // m + 1
    return out


def bucket_events(events: pd.DataFrame, spec: BucketSpec) -> pd.Series:
    """Bucket label per event id; events without the variable are left out."""
    col = events[spec.variable].abs() if spec.absolute else events[spec.variable]
    ok = col.notna()
    if spec.scheme == "sign_conditional":
        ok &= events[spec.sign_variable].notna()
    sub = events.loc[ok]
    vals = col.loc[ok].to_numpy(float)
    keys = sub["event_id"].astype(str).tolist()
    labels = pd.Series(index=sub["event_id"].to_numpy(), dtype=object)
    if spec.scheme == "quantile":
        b = rank_buckets(vals, keys, spec.n)
        labels[:] = [f"#{i}" for i in b]
    elif spec.scheme == "sign_conditional":
        neg = (sub[spec.sign_variable] < 0).to_numpy()
        for mask, tag in ((neg, "<0"), (~neg, ">=0")):
            idx = np.flatnonzero(mask)
            b = rank_buckets(vals[idx], [keys[i] for i in idx], spec.n)
            labels.iloc[idx] = [f"SUE{tag} #{i}" for i in b]
    else:
        raise InvalidConfig(f"unknown bucket scheme {spec.scheme!r}")
    return labels


def quantile_cutoffs(values, n: int) -> np.ndarray:
    """Interior cutoffs at k/n quantiles (linear interpolation), for reporting."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    return np.quantile(v, np.arange(1, n) / n, method="linear")


def average_curve(paths: pd.DataFrame, labels: pd.Series, value: str) -> pd.DataFrame:
    """Mean path per bucket and day over events with data on that day, with counts."""
    df = paths[["event_id", "tau", value]].copy()
    df["bucket"] = df["event_id"].map(labels)
    df = df.dropna(subset=["bucket", value])
    g = df.groupby(["bucket", "tau"], sort=True)[value]
    return g.agg(["mean", "count"]).reset_index()


def cumulate(paths: pd.DataFrame, value: str, out: str) -> pd.DataFrame:
    """Running sum of ``value`` over tau per event; NaN until the first observed day."""
    df = paths.sort_values(["event_id", "tau"]).copy()
    filled = df[value].fillna(0.0)
    seen = df[value].notna().groupby(df["event_id"]).cummax()
    df[out] = filled.groupby(df["event_id"]).cumsum().where(seen)
    return df


# ---------------------------------------------------------------------------
# tables


@dataclass
class TableResult:
    spec_id: str
    fits: list[PanelFit]
    wald: list[tuple[float, float] | None]


def run_table(spec_id: str, data: pd.DataFrame, cov_type: str = "dcluster") -> TableResult:
    """Fit every column of a table with firm and year-quarter effects."""
    if spec_id not in TABLE_SPECS:
        raise InvalidConfig(f"unknown table {spec_id!r}")
    fits, walds = [], []
    for dep, regs in TABLE_SPECS[spec_id]:
        table = PanelTable.from_frame(data, dep, regs)
        if table.n <= len(regs):
            raise InsufficientData(f"{spec_id} {dep}: {table.n} complete rows for {len(regs)} regressors")
        fit = fe_ols(table, cov_type=cov_type)
        fits.append(fit)
        pair = WALD_PAIRS.get(spec_id)
        if pair and pair[0] in fit.columns and pair[1] in fit.columns:
            walds.append(wald_equal(fit, *pair))
        else:
            walds.append(None)
    return TableResult(spec_id, fits, walds)
