"""File-level stages chaining the corpus, lexicon, tone, market and study steps.

Every stage reads and writes plain files in a working directory so the CLI
can run them one at a time or all together. Row order in every output is a
stable key order, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import pandas as pd

from . import corpus, lexicon, market, report, study, tone
from .errors import InvalidConfig
from .trading_calendar import TradingCalendar

log = logging.getLogger(__name__)

FIGURES = ("F4", "F5", "F6")
TABLES = tuple(study.TABLE_SPECS)


def _write_counts(counts: dict, path: Path) -> None:
    pd.DataFrame(list(counts.items()), columns=["stage", "count"]).to_csv(path, index=False)


def ingest_stage(docs_path: Path, out_dir: Path, cfg: study.StudyConfig) -> list[corpus.Document]:
    docs, stats = corpus.ingest(corpus.read_jsonl(docs_path), dedup_threshold=cfg.dedup_threshold, seed=cfg.seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus.write_jsonl(docs, out_dir / "documents.jsonl")
    corpus.write_stats(stats, out_dir / "ingest_stats.csv")
    log.info("ingest: %d of %d documents retained", stats["retained"], stats["input"])
    return docs


def calibrate_stage(
    docs: Sequence[corpus.Document],
    prices: pd.DataFrame,
    calendar: TradingCalendar,
    out_dir: Path,
    cfg: study.StudyConfig,
    seed_lexicon: lexicon.SeedLexicon | None = None,
) -> list[lexicon.LexiconModel]:
    seed_lexicon = seed_lexicon or lexicon.load_seed_lexicon()
    returns = lexicon.market_adjusted_returns(prices)
    models = lexicon.expanding_lexicons(docs, returns, calendar, seed_lexicon.candidates, min_days=cfg.min_days)
    lex_dir = out_dir / "lexicons"
    lex_dir.mkdir(parents=True, exist_ok=True)
    for m in models:
        m.save(lex_dir / f"lexicon_{m.train_end.year}.csv")
    return models


def load_lexicons(out_dir: Path) -> list[lexicon.LexiconModel]:
    return [lexicon.LexiconModel.load(p) for p in sorted((out_dir / "lexicons").glob("lexicon_*.csv"))]


@dataclass
class ToneOutputs:
    doc_tones: list
    releases: pd.DataFrame
    series: dict
    factor: tone.FactorSeries


def tone_stage(
    docs: Sequence[corpus.Document],
    models: Sequence[lexicon.LexiconModel],
    calendar: TradingCalendar,
    caps: dict | None,
    out_dir: Path,
    cfg: study.StudyConfig,
    seed_lexicon: lexicon.SeedLexicon | None = None,
) -> ToneOutputs:
    seed_lexicon = seed_lexicon or lexicon.load_seed_lexicon()
    news, rel = tone.score_documents(docs, models, calendar, static=seed_lexicon.static)
    series = tone.build_tone_series(news)
    factor = tone.build_factor(series, caps, equal_weight=cfg.equal_weight)
    tone.write_doc_tones(news, out_dir / "doc_tones.csv")
    tone.write_releases(rel, out_dir / "releases.csv")
    tone.write_tones(series, out_dir / "tones.csv")
    tone.write_factor(factor, out_dir / "factor.csv")
    return ToneOutputs(news, tone.read_releases(out_dir / "releases.csv"), series, factor)


def _apply_forecasts(earnings: pd.DataFrame, forecasts_path: Path | None) -> pd.DataFrame:
    """Replace the median forecast column with one computed from analyst forecasts."""
    if forecasts_path is None or not forecasts_path.exists():
        return earnings
    fc = pd.read_csv(forecasts_path, dtype={"firm": str, "analyst": str}, float_precision="round_trip")
    fc["announce_date"] = pd.to_datetime(fc["announce_date"]).dt.date
    fc["forecast_date"] = pd.to_datetime(fc["forecast_date"]).dt.date
    groups = {k: g for k, g in fc.groupby(["firm", "announce_date"], sort=False)}
    out = earnings.copy()
    vals = []
    for firm, ann, old in zip(out["firm"], out["announce_date"], out["median_forecast"]):
        g = groups.get((firm, ann))
        if g is None:
            vals.append(old)
            continue
        vals.append(market.median_forecast(zip(g["analyst"], g["forecast_date"], g["value"]), ann))
    out["median_forecast"] = vals
    return out.loc[out["median_forecast"].notna()]


def market_stage(
    prices: pd.DataFrame,
    earnings: pd.DataFrame,
    calendar: TradingCalendar,
    out_dir: Path,
    cfg: study.StudyConfig,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    events, paths, attrition = market.build_market_events(
        prices, earnings, calendar, cfg.L, cfg.K, cfg.min_tone_obs, cfg.windows, cfg.path_range
    )
    events.to_csv(out_dir / "market_events.csv", index=False)
    paths.to_csv(out_dir / "market_paths.csv", index=False)
    _write_counts(attrition, out_dir / "market_attrition.csv")
    return events, paths


def events_stage(
    market_events: pd.DataFrame,
    tones: ToneOutputs,
    calendar: TradingCalendar,
    out_dir: Path,
    cfg: study.StudyConfig,
) -> tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    es = study.build_events(market_events, tones.series, tones.factor, tones.releases, tones.doc_tones, calendar, cfg)
    _write_counts(es.attrition, out_dir / "event_attrition.csv")
    events, ratc = study.residualize(es, cfg)
    events = events.sort_values("event_id").reset_index(drop=True)
    events.to_csv(out_dir / "events.csv", index=False)
    es.paths.to_csv(out_dir / "tone_paths.csv", index=False)
    ratc.to_csv(out_dir / "ratc.csv", index=False)
    return events, es.paths, ratc


# ---------------------------------------------------------------------------
# figures

FIGURE_SPECS = {
    "F4": (study.BucketSpec("sue", "quantile", 5), "cat", "Average CAT by SUE quintile", "CAT"),
    "F5": (study.BucketSpec("rcat", "sign_conditional", 3), "car", "Average CAR by RCAT tercile and SUE sign",
           "CAR (%)"),
    "F6": (study.BucketSpec("rcat", "sign_conditional", 3, absolute=True), "cast",
           "Average CAST by |RCAT| tercile and SUE sign", "CAST"),
}


def figure_stage(
    events: pd.DataFrame,
    tone_paths: pd.DataFrame,
    market_paths: pd.DataFrame,
    out_dir: Path,
    figures: Sequence[str] = FIGURES,
) -> dict[str, pd.DataFrame]:
    paths = tone_paths.merge(market_paths, on=["event_id", "tau"], how="outer")
    paths = paths.loc[paths["event_id"].isin(events["event_id"])]
    paths = study.cumulate(paths, "ar", "car")
    paths = study.cumulate(paths, "ast", "cast")
    out = {}
    for fig in figures:
        if fig not in FIGURE_SPECS:
            raise InvalidConfig(f"unknown figure {fig!r}")
        spec, value, title, ylabel = FIGURE_SPECS[fig]
        labels = study.bucket_events(events, spec)
        curves = study.average_curve(paths, labels, value)
        curves.to_csv(out_dir / f"{fig}.csv", index=False, float_format="%.10g")
        report.plot_curves(curves, title, ylabel, out_dir / f"{fig}.svg", spec.labels())
        out[fig] = curves
    return out


# ---------------------------------------------------------------------------
# whole study


@dataclass
class StudyInputs:
    docs: Path
    prices: Path
    earnings: Path
    calendar: Path
    caps: Path | None = None
    forecasts: Path | None = None

    @classmethod
    def from_dir(cls, data_dir: str | Path) -> "StudyInputs":
        d = Path(data_dir)
        opt = {name: d / f"{name}.csv" for name in ("caps", "forecasts")}
        return cls(d / "docs.jsonl", d / "prices.csv", d / "earnings.csv", d / "calendar.csv",
                   **{k: (p if p.exists() else None) for k, p in opt.items()})


@dataclass
class StudyResult:
    events: pd.DataFrame
    tables: dict[str, study.TableResult] = field(default_factory=dict)
    curves: dict[str, pd.DataFrame] = field(default_factory=dict)


def run_study(
    inputs: StudyInputs,
    out_dir: str | Path,
    cfg: study.StudyConfig | None = None,
    tables: Sequence[str] = TABLES,
    figures: Sequence[str] = FIGURES,
) -> StudyResult:
    """Run every stage from raw documents and market files to tables and figures."""
    cfg = cfg or study.StudyConfig()
    bad = [t for t in tables if t not in study.TABLE_SPECS] + [f for f in figures if f not in FIGURE_SPECS]
    if bad:
        raise InvalidConfig(f"unknown tables or figures: {bad}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n")

    calendar = TradingCalendar.from_csv(inputs.calendar)
    prices = market.read_prices(inputs.prices)
    earnings = _apply_forecasts(market.read_earnings(inputs.earnings), inputs.forecasts)
    caps = tone.read_caps(inputs.caps) if inputs.caps is not None else None
    if caps is None and not cfg.equal_weight:
        raise InvalidConfig("market caps are required unless equal_weight is set")

    seed_lex = lexicon.load_seed_lexicon()
    docs = ingest_stage(inputs.docs, out, cfg)
    models = calibrate_stage(docs, prices, calendar, out, cfg, seed_lex)
    tones = tone_stage(docs, models, calendar, caps, out, cfg, seed_lex)
    m_events, m_paths = market_stage(prices, earnings, calendar, out, cfg)
    events, t_paths, _ = events_stage(m_events, tones, calendar, out, cfg)

    result = StudyResult(events)
    data = study.prepare_controls(events.loc[events["rcat"].notna()], cfg.winsor)
    for tid in tables:
        res = study.run_table(tid, data)
        report.write_table(res, out)
        result.tables[tid] = res
    result.curves = figure_stage(events.loc[events["rcat"].notna()], t_paths, m_paths, out, figures)
    return result
