"""Firm-day tone series, the market tone factor and event-time alignment."""

from __future__ import annotations

import bisect
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .corpus import CALL_TRANSCRIPT, NEWS, PRESS_RELEASE, Document
from .errors import NoFirms, NoScoredWords, ValidationError
from .lexicon import LexiconModel, StaticLexicon, doc_tone, lm_tone
from .trading_calendar import TradingCalendar

log = logging.getLogger(__name__)


def align_relative(series: Mapping[date, float], event_date: date, calendar: TradingCalendar) -> dict[int, float]:
    """Re-key a date-indexed series by trading days relative to ``event_date``.

    Dates that are not trading days are ignored.
    """
    t0 = calendar.index(event_date)
    out = {}
    for d, v in series.items():
        i = calendar._pos.get(d)
        if i is not None:
            out[i - t0] = v
    return dict(sorted(out.items()))


def to_dates(series: Mapping[int, float], event_date: date, calendar: TradingCalendar) -> dict[date, float]:
    """Inverse of ``align_relative``."""
    t0 = calendar.index(event_date)
    out = {}
    for tau, v in series.items():
        i = t0 + tau
        if 0 <= i < len(calendar.dates):
            out[calendar.dates[i]] = v
    return out


@dataclass
class ToneSeries:
    firm_id: str
    observations: dict[date, tuple[float, int]] = field(default_factory=dict)

    def tones(self) -> dict[date, float]:
        return {d: t for d, (t, _) in self.observations.items()}


@dataclass
class FactorSeries:
    values: dict[date, float] = field(default_factory=dict)
    weights_used: dict[date, dict[str, float]] = field(default_factory=dict)


def compute_factor(
    day_tones: Mapping[str, float],
    weights: Mapping[str, float] | None = None,
    equal_weight: bool = False,
) -> tuple[float, dict[str, float]]:
    """Weighted average tone across the firms with a tone that day.

    Weights are the firms' market caps normalized over those firms; returns
    the factor value and the normalized weights.
    """
    firms = sorted(day_tones)
    if not firms:
        raise NoFirms("no firm has a tone on this day")
    if equal_weight:
        w = np.ones(len(firms))
    else:
        if weights is None:
            raise ValidationError("market caps required for the cap-weighted factor")
        w = np.array([weights[f] for f in firms], dtype=float)
        if (w <= 0).any() or not np.isfinite(w).all():
            raise ValidationError("market caps must be positive")
    w = w / w.sum()
    tones = np.array([day_tones[f] for f in firms], dtype=float)
    return float(w @ tones), dict(zip(firms, w.tolist()))


# ---------------------------------------------------------------------------
# corpus scoring


def lexicon_for(doc_day: date, lexicons: Sequence[LexiconModel]) -> LexiconModel | None:
    """Most recent lexicon whose training window ends strictly before ``doc_day``."""
    best = None
    for lex in lexicons:
        if lex.train_end is not None and lex.train_end < doc_day:
            if best is None or lex.train_end > best.train_end:
                best = lex
    return best


@dataclass
class DocTone:
    doc_id: str
    firm_id: str
    date: date
    source_type: str
    kind: str
    tone: float


def score_documents(
    docs: Iterable[Document],
    lexicons: Sequence[LexiconModel],
    calendar: TradingCalendar,
    static: StaticLexicon | None = None,
) -> tuple[list[DocTone], list[dict]]:
    """Score news documents and firm disclosures out of sample.

    Each document gets the latest lexicon trained before its own date and is
    assigned to the first trading day on or after it. Returns the tones of
    news documents that contain a scored word, and one row per press release
    or call transcript with its LM and GWP tones (GWP is NaN when no scored
    word occurs).
    """
    news: list[DocTone] = []
    releases: list[dict] = []
    for doc in docs:
        tday = calendar.roll_forward(doc.day)
        if tday is None:
            continue
        lex = lexicon_for(doc.day, lexicons)
        if lex is not None:
            assert doc.day > lex.train_end, "look-ahead: lexicon trained on the document's date"
        gwp = np.nan
        if lex is not None:
            try:
                gwp = doc_tone(doc, lex)
            except NoScoredWords:
                gwp = np.nan
        if doc.kind in (PRESS_RELEASE, CALL_TRANSCRIPT):
            releases.append(
                {
                    "firm_id": doc.firm_id,
                    "date": tday,
                    "kind": doc.kind,
                    "doc_id": doc.doc_id,
                    "lm_tone": lm_tone(doc, static) if static is not None else np.nan,
                    "gwp_tone": gwp,
                }
            )
        elif doc.kind in (NEWS, None) and np.isfinite(gwp):
            news.append(DocTone(doc.doc_id, doc.firm_id, tday, doc.source_type, NEWS, gwp))
    news.sort(key=lambda d: (d.firm_id, d.date, d.doc_id))
    releases.sort(key=lambda r: (r["firm_id"], r["date"], r["kind"], r["doc_id"]))
    return news, releases


def build_tone_series(doc_tones: Iterable[DocTone]) -> dict[str, ToneSeries]:
    """Daily tone per firm as the mean tone of that day's documents."""
    acc: dict[tuple[str, date], list[float]] = defaultdict(list)
    for dt in doc_tones:
        acc[(dt.firm_id, dt.date)].append(dt.tone)
    out: dict[str, ToneSeries] = {}
    for (firm, d) in sorted(acc):
        vals = acc[(firm, d)]
        out.setdefault(firm, ToneSeries(firm)).observations[d] = (float(np.mean(vals)), len(vals))
    return out


def build_factor(
    series: Mapping[str, ToneSeries],
    caps: Mapping[tuple[str, date], float] | None = None,
    equal_weight: bool = False,
) -> FactorSeries:
    """Factor value for every date on which at least one firm has a tone.

    A firm without a cap on the day uses its most recent earlier cap and is
    left out of that day's factor when it has none.
    """
    by_day: dict[date, dict[str, float]] = defaultdict(dict)
    for firm, ts in series.items():
        for d, (tone, _) in ts.observations.items():
            by_day[d][firm] = tone
    cap_hist: dict[str, tuple[list[date], list[float]]] = {}
    if caps is not None and not equal_weight:
        tmp: dict[str, list[tuple[date, float]]] = defaultdict(list)
        for (firm, d), v in caps.items():
            tmp[firm].append((d, v))
        for firm, rows in tmp.items():
            rows.sort()
            cap_hist[firm] = ([r[0] for r in rows], [r[1] for r in rows])

    def cap_on(firm: str, d: date) -> float | None:
        hist = cap_hist.get(firm)
        if hist is None:
            return None
        i = bisect.bisect_right(hist[0], d) - 1
        return hist[1][i] if i >= 0 else None

    out = FactorSeries()
    for d in sorted(by_day):
        tones = by_day[d]
        if equal_weight:
            val, w = compute_factor(tones, equal_weight=True)
        else:
            weights = {}
            for f in tones:
                c = cap_on(f, d)
                if c is not None and c > 0:
                    weights[f] = c
            if not weights:
                continue
            val, w = compute_factor({f: tones[f] for f in weights}, weights)
        out.values[d] = val
        out.weights_used[d] = w
    return out


# ---------------------------------------------------------------------------
# csv io


def write_tones(series: Mapping[str, ToneSeries], path: str | Path) -> None:
    rows = [
        (firm, d.isoformat(), tone, cnt)
        for firm in sorted(series)
        for d, (tone, cnt) in sorted(series[firm].observations.items())
    ]
    pd.DataFrame(rows, columns=["firm_id", "date", "tone", "doc_count"]).to_csv(path, index=False)


def read_tones(path: str | Path) -> dict[str, ToneSeries]:
    df = pd.read_csv(path, dtype={"firm_id": str}, float_precision="round_trip")
    out: dict[str, ToneSeries] = {}
    for firm, d, tone, cnt in zip(df.firm_id, pd.to_datetime(df.date).dt.date, df.tone, df.doc_count):
        out.setdefault(firm, ToneSeries(firm)).observations[d] = (float(tone), int(cnt))
    return out


def write_factor(factor: FactorSeries, path: str | Path) -> None:
    pd.DataFrame(
        [(d.isoformat(), v) for d, v in sorted(factor.values.items())], columns=["date", "factor"]
    ).to_csv(path, index=False)


def read_factor(path: str | Path) -> FactorSeries:
    df = pd.read_csv(path, float_precision="round_trip")
    return FactorSeries(values=dict(zip(pd.to_datetime(df.date).dt.date, df.factor.astype(float))))


def write_doc_tones(doc_tones: Iterable[DocTone], path: str | Path) -> None:
    pd.DataFrame(
        [(t.doc_id, t.firm_id, t.date.isoformat(), t.source_type, t.tone) for t in doc_tones],
        columns=["doc_id", "firm_id", "date", "source_type", "tone"],
    ).to_csv(path, index=False)


def read_doc_tones(path: str | Path) -> list[DocTone]:
    df = pd.read_csv(path, dtype={"doc_id": str, "firm_id": str}, float_precision="round_trip")
    return [
        DocTone(i, f, d, s, NEWS, float(t))
        for i, f, d, s, t in zip(df.doc_id, df.firm_id, pd.to_datetime(df.date).dt.date, df.source_type, df.tone)
    ]


def write_releases(rows: Iterable[dict], path: str | Path) -> None:
    df = pd.DataFrame(list(rows), columns=["firm_id", "date", "kind", "doc_id", "lm_tone", "gwp_tone"])
    df["date"] = [d.isoformat() if isinstance(d, date) else d for d in df["date"]]
    df.to_csv(path, index=False)


def read_releases(path: str | Path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"firm_id": str, "doc_id": str}, float_precision="round_trip")
    df["date"] = pd.to_datetime(df["date"]).dt.date
    return df


def read_caps(path: str | Path) -> dict[tuple[str, date], float]:
    df = pd.read_csv(path, dtype={"firm": str}, float_precision="round_trip")
    return dict(zip(zip(df["firm"], pd.to_datetime(df["date"]).dt.date), df["cap"].astype(float)))
