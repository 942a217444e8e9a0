"""Command-line entry point.

Exit codes: 0 success, 2 invalid input or configuration, 3 estimation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import date
from pathlib import Path

import pandas as pd

from . import __version__, corpus, lexicon, market, pipeline, study, tone, verify
from .errors import EstimationError, InvalidConfig, ValidationError
from .synth import SynthConfig, generate_synthetic_market
from .trading_calendar import TradingCalendar

log = logging.getLogger("mediatone")


def _config(args) -> study.StudyConfig:
    cfg = study.StudyConfig.from_json(args.config) if getattr(args, "config", None) else study.StudyConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def cmd_synth(args) -> None:
    cfg = SynthConfig.from_dict(json.loads(Path(args.config).read_text())) if args.config else SynthConfig()
    truth = generate_synthetic_market(args.seed, cfg, args.out)
    print(f"wrote {truth['n_documents']} documents and {len(truth['events'])} announcements to {args.out}")


def _sibling(path: str | Path, name: str) -> Path:
    return Path(path).parent / name


def _mkparent(path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def cmd_ingest(args) -> None:
    cfg = _config(args)
    if args.dedup_threshold is not None:
        cfg.dedup_threshold = args.dedup_threshold
        cfg.validate()
    fcfg = corpus.FilterConfig(min_words=args.min_words)
    docs, stats = corpus.ingest(corpus.read_jsonl(args.input), fcfg, cfg.dedup_threshold, seed=cfg.seed)
    corpus.write_jsonl(docs, _mkparent(args.out))
    corpus.write_stats(stats, _mkparent(args.stats or _sibling(args.out, "ingest_stats.csv")))
    print(f"retained {stats['retained']} of {stats['input']} documents")


def _returns(args, calendar: TradingCalendar | None):
    """Market-adjusted percent returns keyed by (firm, date) and the calendar to roll documents on."""
    if args.prices:
        prices = market.read_prices(args.prices)
        rets = lexicon.market_adjusted_returns(prices)
    else:
        df = pd.read_csv(args.returns, dtype={"firm": str}, float_precision="round_trip")
        days = pd.to_datetime(df["date"]).dt.date
        rets = dict(zip(zip(df["firm"], days), df["return"].astype(float)))
    if calendar is None:
        calendar = TradingCalendar(d for _, d in rets)
    return rets, calendar


def cmd_calibrate(args) -> None:
    cfg = _config(args)
    if args.min_days is not None:
        cfg.min_days = args.min_days
    docs = corpus.load_documents(args.corpus)
    calendar = TradingCalendar.from_csv(args.calendar) if args.calendar else None
    rets, calendar = _returns(args, calendar)
    cands = lexicon.load_seed_lexicon(args.seed_lexicon).candidates
    if args.expanding:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        models = lexicon.expanding_lexicons(docs, rets, calendar, cands, min_days=cfg.min_days)
        for m in models:
            m.save(out / f"lexicon_{m.train_end.year}.csv")
        print(f"wrote {len(models)} lexicons to {out}")
        return
    end = max(d.day for d in docs) if args.train_end is None else date.fromisoformat(args.train_end)
    model = lexicon.calibrate_corpus(docs, rets, calendar, cands, end, min_days=cfg.min_days)
    model.save(_mkparent(args.out))
    print(f"{len(model)} scored words from {model.n_obs} firm-days")


def cmd_tone(args) -> None:
    cfg = _config(args)
    if args.equal_weight:
        cfg.equal_weight = True
    docs = corpus.load_documents(args.corpus)
    calendar = TradingCalendar.from_csv(args.calendar)
    caps = tone.read_caps(args.caps) if args.caps else None
    if caps is None and not cfg.equal_weight:
        raise InvalidConfig("--caps is required unless --equal-weight is given")
    models = [lexicon.LexiconModel.load(p) for p in sorted(Path(args.lexicon_dir).glob("lexicon_*.csv"))]
    if not models:
        raise InvalidConfig(f"no lexicon_*.csv files in {args.lexicon_dir}")
    static = lexicon.load_seed_lexicon(args.seed_lexicon).static
    news, rel = tone.score_documents(docs, models, calendar, static=static)
    series = tone.build_tone_series(news)
    factor = tone.build_factor(series, caps, equal_weight=cfg.equal_weight)
    out = _mkparent(args.out)
    tone.write_tones(series, out)
    tone.write_factor(factor, _mkparent(args.factor_out or _sibling(out, "factor.csv")))
    tone.write_doc_tones(news, _sibling(out, "doc_tones.csv"))
    tone.write_releases(rel, _sibling(out, "releases.csv"))
    print(f"{len(news)} scored articles, {len(factor.values)} factor days")


def cmd_market(args) -> None:
    cfg = _config(args)
    earnings = market.read_earnings(args.earnings)
    earnings = pipeline._apply_forecasts(earnings, Path(args.forecasts) if args.forecasts else None)
    events, paths, attrition = market.build_market_events(
        market.read_prices(args.prices), earnings, TradingCalendar.from_csv(args.calendar),
        cfg.L, cfg.K, cfg.min_tone_obs, cfg.windows, cfg.path_range,
    )
    out = _mkparent(args.out)
    events.to_csv(out, index=False)
    paths.to_csv(_sibling(out, "market_paths.csv"), index=False)
    pipeline._write_counts(attrition, _sibling(out, "market_attrition.csv"))
    print(f"{len(events)} events with market measures")


def cmd_events(args) -> None:
    cfg = _config(args)
    calendar = TradingCalendar.from_csv(args.calendar)
    tones = pipeline.ToneOutputs(
        doc_tones=tone.read_doc_tones(args.doc_tones or _sibling(args.tones, "doc_tones.csv")),
        releases=tone.read_releases(args.releases or _sibling(args.tones, "releases.csv")),
        series=tone.read_tones(args.tones),
        factor=tone.read_factor(args.factor),
    )
    m_events = pd.read_csv(args.controls, dtype={"firm_id": str}, float_precision="round_trip")
    es = study.build_events(m_events, tones.series, tones.factor, tones.releases, tones.doc_tones, calendar, cfg)
    events, ratc = study.residualize(es, cfg)
    out = _mkparent(args.out)
    if len(events):
        events = events.sort_values("event_id")
    events.to_csv(out, index=False)
    ratc.to_csv(_sibling(out, "ratc.csv"), index=False)
    es.paths.to_csv(_sibling(out, "tone_paths.csv"), index=False)
    pipeline._write_counts(es.attrition, _sibling(out, "event_attrition.csv"))
    n_rcat = int(events["rcat"].notna().sum()) if len(events) else 0
    print(f"{len(events)} qualifying events, {n_rcat} with RCAT")


def cmd_study(args) -> None:
    cfg = _config(args)
    res = pipeline.run_study(
        pipeline.StudyInputs.from_dir(args.data), args.out, cfg,
        tables=_csv_list(args.tables), figures=_csv_list(args.figures),
    )
    for tid in res.tables:
        print((Path(args.out) / f"{tid}.txt").read_text())


def cmd_verify(args) -> None:
    names = list(verify.SUITES) if args.suite == "all" else _csv_list(args.suite)
    unknown = set(names) - set(verify.SUITES)
    if unknown:
        raise InvalidConfig(f"unknown suites: {sorted(unknown)}")
    reports = verify.run_all(names, args.seeds)
    if args.report:
        verify.write_report(reports, args.report)
    failed = 0
    for name in names:
        rs = [r for r in reports if r.oracle == name]
        ok = sum(r.passed for r in rs)
        failed += len(rs) - ok
        print(f"{name:18s} {ok}/{len(rs)} within {verify.TOLERANCES[name]:g} "
              f"(max deviation {max(r.max_abs_dev for r in rs):.3g})")
    if failed:
        raise EstimationError(f"{failed} oracle comparisons outside tolerance")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mediatone", description="Media tone event-study toolkit.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--config", help="study config JSON")
        sp.add_argument("--seed", type=int)
        return sp

    sp = sub.add_parser("synth", help="generate a synthetic market")
    sp.set_defaults(func=cmd_synth)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--config", help="generator config JSON")
    sp.add_argument("--out", required=True)

    sp = add("ingest", cmd_ingest, "filter, de-duplicate and classify raw documents")
    sp.add_argument("--in", dest="input", required=True, help="raw documents JSONL")
    sp.add_argument("--out", required=True, help="cleaned documents JSONL")
    sp.add_argument("--min-words", type=int, default=200)
    sp.add_argument("--dedup-threshold", type=float)
    sp.add_argument("--stats", help="rejection counts CSV")

    sp = add("calibrate", cmd_calibrate, "fit word scores from returns")
    sp.add_argument("--corpus", required=True, help="cleaned documents JSONL")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--returns", help="CSV firm,date,return with market-adjusted percent returns")
    src.add_argument("--prices", help="prices CSV; returns are market-adjusted from it")
    sp.add_argument("--calendar", help="trading calendar CSV (defaults to the return dates)")
    sp.add_argument("--seed-lexicon")
    sp.add_argument("--train-end", help="last training date")
    sp.add_argument("--min-days", type=int)
    sp.add_argument("--expanding", action="store_true", help="one lexicon per year end; --out is a directory")
    sp.add_argument("--out", required=True)

    sp = add("tone", cmd_tone, "score documents and build tone series and the factor")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--lexicon-dir", required=True)
    sp.add_argument("--calendar", required=True)
    sp.add_argument("--caps")
    sp.add_argument("--equal-weight", action="store_true")
    sp.add_argument("--seed-lexicon")
    sp.add_argument("--out", required=True, help="tones CSV")
    sp.add_argument("--factor-out")

    sp = add("market", cmd_market, "earnings surprises, CAR and CAST per announcement")
    sp.add_argument("--prices", required=True)
    sp.add_argument("--earnings", required=True)
    sp.add_argument("--forecasts")
    sp.add_argument("--calendar", required=True)
    sp.add_argument("--out", required=True)

    sp = add("events", cmd_events, "qualifying events, abnormal tone and residual tone")
    sp.add_argument("--tones", required=True)
    sp.add_argument("--factor", required=True)
    sp.add_argument("--controls", required=True, help="per-event market measures from the market stage")
    sp.add_argument("--releases")
    sp.add_argument("--doc-tones")
    sp.add_argument("--calendar", required=True)
    sp.add_argument("--out", required=True)

    sp = add("study", cmd_study, "run every stage and write tables and figures")
    sp.add_argument("--data", required=True, help="directory with docs.jsonl, prices.csv, earnings.csv, calendar.csv")
    sp.add_argument("--tables", default=",".join(pipeline.TABLES))
    sp.add_argument("--figures", default=",".join(pipeline.FIGURES))
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("verify", help="compare numeric kernels with brute-force oracles")
    sp.set_defaults(func=cmd_verify)
    sp.add_argument("--suite", default="all")
    sp.add_argument("--seeds", type=int, default=100)
    sp.add_argument("--report")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EstimationError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
