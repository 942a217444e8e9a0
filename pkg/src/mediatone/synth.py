"""Synthetic markets with planted effects for tests, demos and benchmarks.

``generate_synthetic_market`` writes a complete input set (news corpus,
prices, earnings, forecasts, caps, calendar) plus a ground-truth file. The
smaller generators below build in-memory inputs for individual stages.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import InvalidConfig
from .lexicon import load_seed_lexicon
from .stemmer import porter_stem

log = logging.getLogger(__name__)

FILLER_WORDS = """company market shares quarter business customers products services operations management
team year month week day report analyst investor executive officer chief president director board
sales revenue segment region division unit plant factory store retail online digital software
hardware network platform system data cloud service product line brand consumer client partner
supplier vendor contract shipment inventory capacity production output volume price cost
margin expense spending budget plan program project initiative strategy model approach process
industry sector economy country state city area location site office headquarters building
technology research development engineering design manufacturing distribution logistics transport
oil gas electric water food beverage health medical drug hospital insurance bank
telecom media entertainment travel airline hotel automotive vehicle truck car aircraft chemical
material metal steel paper packaging equipment machine tool device component part kit package
north south east west central international domestic global local national federal regional
monday tuesday wednesday thursday friday morning afternoon evening today yesterday tomorrow
said says according noted added told stated explained wrote asked called
the a an of to in for on with by at from as into about over after before under between during
and or but also while which that this these those it its their they he she we our
is was are were be been has have had will would could should may might can""".split()

PRESS_RELEASE_LINES = (
    "reports financial results for the quarter",
    "net income and earnings per share on a diluted basis",
    "revenue and operating income for the fiscal quarter",
    "cash flow and outlook guidance",
    "reconciliation of gaap measures",
    "forward-looking statements",
    "contact investor relations",
)
TRANSCRIPT_LINES = (
    "operator good morning and welcome to the conference call",
    "prepared remarks from management",
    "question from the analyst",
    "answer from the chief officer",
    "thank you to all participants on the call",
)
NEWSWIRE_NAMES = ("Business Wire", "PR Newswire", "Dow Jones Newswires", "Reuters")
NEWSPAPER_NAMES = ("Daily Ledger", "Evening Courier", "Metro Times")
WEB_NAMES = ("MarketPulse Online", "Finance Hub", "Street Digest")


@dataclass
class SynthConfig:
    """Knobs of the synthetic market. Returns are in percent unless noted."""

    n_firms: int = 20
    n_days: int = 1512
    start: str = "2001-01-02"
    n_words: int = 40
    text_sd: float = 1.0
    noise_sd: float = 2.0
    market_sd: float = 1.0
    news_rate: float = 0.5
    weekend_rate: float = 0.05
    event_news_multiplier: float = 4.0
    newswire_share: float = 0.5
    newspaper_share: float = 0.3
    doc_words: tuple[int, int] = (220, 340)
    scored_share: float = 0.15
    sentiment_tilt: float = 1.5
    holiday_rate: float = 0.01
    quarter_gap: int = 63
    sue_sd: float = 0.004
    sue_return: float = 1.5
    media_tone: float = 1.0
    media_return: float = 1.0
    reversal: float = 0.5
    missing_call_rate: float = 0.05
    realign_rate: float = 0.2
    n_noise: dict[str, int] = field(
        default_factory=lambda: {
            "short": 10,
            "multi_firm": 10,
            "excluded_tag": 10,
            "excluded_source": 5,
            "low_relevance": 10,
            "machine_generated": 5,
            "exact_duplicate": 15,
            "near_duplicate": 15,
            "malformed": 3,
        }
    )

    def validate(self) -> None:
        problems = []
        if self.n_firms < 1:
            problems.append("n_firms must be positive")
        if self.n_days < 300:
            problems.append("n_days must be at least 300")
        if not 2 <= self.n_words <= 400:
            problems.append("n_words must be in [2, 400]")
        if self.noise_sd < 0 or self.text_sd < 0:
            problems.append("noise scales must be non-negative")
        if self.doc_words[0] > self.doc_words[1] or self.doc_words[0] < 1:
            problems.append("doc_words must be an increasing positive pair")
        if not 0 < self.scored_share < 1:
            problems.append("scored_share must be in (0, 1)")
        if self.newswire_share + self.newspaper_share > 1:
            problems.append("source shares exceed 1")
        if self.quarter_gap < 61:
            problems.append("quarter_gap must be at least 61 trading days")
        if any(v < 0 for v in self.n_noise.values()):
            problems.append("noise counts must be non-negative")
        try:
            date.fromisoformat(self.start)
        except ValueError:
            problems.append("start must be an ISO date")
        if problems:
            raise InvalidConfig("; ".join(problems))

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "doc_words" in d:
            d["doc_words"] = tuple(d["doc_words"])
        return cls(**d)


def planted_scores(n_words: int, rng: np.random.Generator) -> np.ndarray:
    """Standardized scores with half positive and half negative words, bounded away from zero.

    Positive magnitudes mirror the negative ones so the raw mean is zero.
    """
    half = n_words // 2
    mags = rng.uniform(0.5, 2.0, size=half)
    raw = np.concatenate([mags, -mags])
    if n_words % 2:
        raw = np.append(raw, rng.choice([-1, 1]) * rng.uniform(0.5, 2.0))
    return (raw - raw.mean()) / raw.std()


def _pick_scored_words(n_words: int, rng: np.random.Generator) -> tuple[list[str], list[str], list[str]]:
    """Raw words from the seed lexicon with distinct stems, half of each polarity.

    Returns (raw words, stems, polarities) with positive words first.
    """
    seed = load_seed_lexicon()
    pos, neg = [], []
    seen = set()
    from importlib import resources

    text = resources.files("mediatone.data").joinpath("seed_lexicon.csv").read_text()
    for row in csv.DictReader(text.splitlines()):
        w = row["word"].strip().lower()
        s = porter_stem(w)
        if not w.isalpha() or len(w) < 4 or s in seen:
            continue
        if s in seed.static.positive:
            pos.append(w)
            seen.add(s)
        elif s in seed.static.negative:
            neg.append(w)
            seen.add(s)
    n_pos = (n_words + 1) // 2
    n_neg = n_words - n_pos
    if n_pos > len(pos) or n_neg > len(neg):
        raise InvalidConfig(f"seed lexicon has too few words for n_words={n_words}")
    p = sorted(rng.choice(pos, size=n_pos, replace=False).tolist())
    n = sorted(rng.choice(neg, size=n_neg, replace=False).tolist())
    words = p + n
    return words, [porter_stem(w) for w in words], ["positive"] * n_pos + ["negative"] * n_neg


def _fillers() -> list[str]:
    cands = load_seed_lexicon().candidates
    return [w for w in dict.fromkeys(FILLER_WORDS) if porter_stem(w) not in cands]


def _trading_days(start: date, n: int, holiday_rate: float, rng: np.random.Generator) -> tuple[list[date], list[date]]:
    """(trading days, all calendar days through the last trading day)."""
    days: list[date] = []
    d = start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    if holiday_rate > 0:
        drop = rng.random(len(days)) < holiday_rate
        drop[:60] = False
        drop[-30:] = False
        days = [x for x, k in zip(days, drop) if not k]
    all_days = [start + timedelta(days=i) for i in range((days[-1] - start).days + 1)]
    return days, all_days


class _TextMaker:
    """Token streams whose scored-word mix leans toward the document's sentiment."""

    def __init__(self, words, stems, word_scores, fillers, cfg: SynthConfig, rng):
        self.words = np.array(words, dtype=object)
        self.stems = stems
        self.word_scores = word_scores
        self.fillers = np.array(fillers, dtype=object)
        ranks = np.arange(1, len(fillers) + 1, dtype=float)
        self.filler_p = (1 / ranks) / (1 / ranks).sum()
        self.cfg = cfg
        self.rng = rng
        self.tilt_unit = word_scores / np.abs(word_scores).max()

    def tokens(self, sentiment: float, n: int | None = None, scored_share: float | None = None) -> tuple[list[str], np.ndarray]:
        """Raw word list plus per-scored-word counts."""
        rng = self.rng
        if n is None:
            n = int(rng.integers(self.cfg.doc_words[0], self.cfg.doc_words[1] + 1))
        share = self.cfg.scored_share if scored_share is None else scored_share
        k = int(rng.binomial(n, share))
        logits = self.cfg.sentiment_tilt * sentiment * self.tilt_unit
        p = np.exp(logits - logits.max())
        p /= p.sum()
        counts = rng.multinomial(k, p)
        scored = np.repeat(self.words, counts)
        filler = rng.choice(self.fillers, size=n - k, p=self.filler_p)
        toks = np.concatenate([scored, filler])
        rng.shuffle(toks)
        return toks.tolist(), counts


def _render(words: list[str], rng: np.random.Generator, lead: str = "") -> str:
    """Words into sentences with capitalization and punctuation."""
    out = [lead] if lead else []
    i = 0
    while i < len(words):
        m = int(rng.integers(8, 16))
        sent = words[i : i + m]
        i += m
        sent[0] = sent[0].capitalize()
        out.append(" ".join(sent) + ".")
    return " ".join(out)


def _source(rng, cfg: SynthConfig) -> tuple[str, str]:
    u = rng.random()
    if u < cfg.newswire_share:
        return "newswire", NEWSWIRE_NAMES[int(rng.integers(len(NEWSWIRE_NAMES)))]
    if u < cfg.newswire_share + cfg.newspaper_share:
        return "newspaper", NEWSPAPER_NAMES[int(rng.integers(len(NEWSPAPER_NAMES)))]
    return "web", WEB_NAMES[int(rng.integers(len(WEB_NAMES)))]


def _fmt(x: float) -> str:
    return repr(float(x))


def generate_synthetic_market(seed: int, config: SynthConfig | None = None, out_dir: str | Path | None = None) -> dict:
    """Simulate a market and its news coverage, optionally writing the input files.

    Written files: ``docs.jsonl``, ``prices.csv``, ``earnings.csv``,
    ``forecasts.csv``, ``caps.csv``, ``calendar.csv`` and ``ground_truth.json``.
    The same seed and config give byte-identical files. Returns the ground
    truth dictionary.

    Daily market-adjusted returns (in percent) are the planted text signal
    ``text_scale * sum_j score_j freq_j`` over the firm-day's clean newswire news
    articles, plus earnings-event terms and Gaussian noise.
    """
    cfg = config or SynthConfig()
    cfg.validate()
    rng = np.random.default_rng(seed)
    start = date.fromisoformat(cfg.start)
    tdays, cal_days = _trading_days(start, cfg.n_days, cfg.holiday_rate, rng)
    T = len(tdays)
    tindex = {d: i for i, d in enumerate(tdays)}
    roll = {}
    j = 0
    for d in cal_days:
        while tdays[j] < d:
            j += 1
        roll[d] = j

    words, stems, polarity = _pick_scored_words(cfg.n_words, rng)
    word_scores = planted_scores(cfg.n_words, rng)
    # positive seed words get the positive planted scores
    order = np.argsort(-word_scores, kind="stable")
    word_scores = word_scores[order]
    maker = _TextMaker(words, stems, word_scores, _fillers(), cfg, rng)

    firms = [f"F{k:03d}" for k in range(cfg.n_firms)]
    F = len(firms)
    beta = rng.uniform(0.8, 1.2, F)
    load = rng.uniform(0.5, 1.5, F)
    shares = rng.integers(100_000_000, 1_000_000_000, F).astype(float)
    price0 = rng.uniform(20, 120, F)
    base_turn = rng.uniform(-6.0, -4.5, F)
    r_m = rng.normal(0.03, cfg.market_sd, T)
    s_m = np.zeros(T)
    for t in range(1, T):
        s_m[t] = 0.9 * s_m[t - 1] + rng.normal(0, 0.3)
    sent = load[:, None] * s_m[None, :] + rng.normal(0, 0.7, (F, T))

    # earnings schedule
    events = []
    event_pct = np.zeros((F, T))
    vol_bump = np.zeros((F, T))
    for k, firm in enumerate(firms):
        t = int(rng.integers(45, 45 + cfg.quarter_gap))
        while t < T - 25:
            sue_z = float(rng.normal())
            s_pr = 0.8 * sue_z + float(rng.normal(0, 0.6))
            s_ec = 0.6 * sue_z + 0.4 * s_pr + float(rng.normal(0, 0.6))
            m = float(rng.normal())
            u = rng.random()
            shift = 0
            if u < cfg.realign_rate:
                shift = -1 if rng.random() < 0.4 else 1
            true_t = t + shift
            for tau in (-1, 0, 1):
                sent[k, true_t + tau] += 0.6 * sue_z + 0.4 * s_pr + cfg.media_tone * m
            event_pct[k, true_t] += cfg.sue_return * sue_z + cfg.media_return * m
            for tau in range(2, 21):
                if true_t + tau < T:
                    event_pct[k, true_t + tau] -= cfg.reversal * m / 19
            vol_bump[k, true_t] += 1.2 + 0.3 * abs(m)
            for tau in (-1, 1):
                vol_bump[k, true_t + tau] += 0.3 + 0.2 * abs(m)
            events.append(
                {"firm": firm, "k": k, "t": t, "true_t": true_t, "sue_z": sue_z, "s_pr": s_pr, "s_ec": s_ec, "media": m,
                 "has_call": bool(rng.random() >= cfg.missing_call_rate)}
            )
            t += int(rng.integers(cfg.quarter_gap, cfg.quarter_gap + 4))
    is_event_day = np.zeros((F, T), dtype=bool)
    for ev in events:
        is_event_day[ev["k"], ev["true_t"] - 1 : ev["true_t"] + 2] = True

    # news documents
    docs = []
    freq_sum = np.zeros((F, T, cfg.n_words))
    freq_n = np.zeros((F, T))
    doc_no = 0
    for d in cal_days:
        trading = d in tindex
        t = roll[d]
        for k, firm in enumerate(firms):
            rate = cfg.news_rate if trading else cfg.weekend_rate
            if trading and is_event_day[k, t]:
                rate *= cfg.event_news_multiplier
            for _ in range(int(rng.poisson(rate))):
                s_d = sent[k, t] + rng.normal(0, 0.3)
                toks, counts = maker.tokens(s_d)
                src, name = _source(rng, cfg)
                ts = datetime(d.year, d.month, d.day, int(rng.integers(6, 21)), int(rng.integers(0, 60)))
                doc_no += 1
                doc = {
                    "doc_id": f"N{doc_no:07d}",
                    "firm_id": firm,
                    "timestamp": ts.isoformat(),
                    "source_type": src,
                    "source_name": name,
                    "relevance": int(rng.integers(85, 101)),
                    "tags": ["company news"],
                    "major_firm_count": int(rng.integers(1, 3)),
                    "raw_text": _render(toks, rng),
                }
                docs.append(doc)
                if src == "newswire":
                    freq_sum[k, t] += counts / len(toks)
                    freq_n[k, t] += 1

    has = freq_n > 0
    f_avg = np.where(has[..., None], freq_sum / np.maximum(freq_n, 1)[..., None], 0.0)
    text_raw = f_avg @ word_scores
    sd = text_raw[has].std() if has.any() else 0.0
    text_scale = cfg.text_sd / sd if sd > 0 else 0.0
    text_pct = np.where(has, text_scale * text_raw, 0.0)

    # returns, prices, volume
    noise = rng.normal(0, cfg.noise_sd, (F, T)) if cfg.noise_sd > 0 else np.zeros((F, T))
    ret_pct = beta[:, None] * r_m[None, :] + text_pct + event_pct + noise
    ret = ret_pct / 100.0
    price = price0[:, None] * np.cumprod(1 + ret, axis=1)
    turn = base_turn[:, None] + rng.normal(0, 0.3, (F, T)) + vol_bump
    volume = np.round(shares[:, None] * np.exp(turn))
    zero_vol = rng.random((F, T)) < 0.002
    for ev in events:
        zero_vol[ev["k"], ev["t"] - 1 : ev["t"] + 2] = False
    volume[zero_vol] = 0.0

    # earnings, forecasts, disclosures
    earn_rows, fc_rows = [], []
    assets = {firm: float(rng.uniform(5e9, 5e10)) for firm in firms}
    gt_events = []
    for ev in events:
        k, firm, t = ev["k"], ev["firm"], ev["t"]
        announced = tdays[t]
        q_end = max(t - 20, 0)
        p_q = float(price[k, q_end])
        n_an = int(rng.integers(3, 9))
        consensus = float(rng.uniform(0.2, 2.0))
        fresh = []
        for a in range(n_an):
            n_fc = int(rng.integers(1, 4))
            ages = sorted(rng.integers(1, 130, n_fc).tolist(), reverse=True)
            if a < 2:
                ages[-1] = int(rng.integers(1, 80))
            vals = []
            for age in ages:
                v = round(consensus + float(rng.normal(0, 0.05)), 4)
                vals.append((age, v))
                fc_rows.append((firm, announced.isoformat(), f"A{a:02d}", (announced - timedelta(days=age)).isoformat(), v))
            valid = [(age, v) for age, v in vals if age <= 90]
            if valid:
                fresh.append(min(valid)[1])
        mfor = float(np.median(fresh))
        sue_val = cfg.sue_sd * ev["sue_z"]
        eps = mfor + sue_val * p_q
        prior_assets = assets[firm]
        roa_true = float(rng.normal(0.02, 0.01))
        net_income = roa_true * prior_assets
        assets[firm] = prior_assets * float(np.exp(rng.normal(0.01, 0.02)))
        mcap = p_q * shares[k]
        book = mcap * float(np.exp(rng.normal(-0.8, 0.4)))
        earn_rows.append(
            (firm, announced.isoformat(), eps, mfor, p_q, net_income / prior_assets, book, mcap, net_income, prior_assets)
        )
        release_docs = []
        toks, _ = maker.tokens(ev["s_pr"], n=int(rng.integers(400, 600)), scored_share=0.12)
        lead = f"{firm} " + ". ".join(PRESS_RELEASE_LINES) + "."
        doc_no += 1
        release_docs.append({
            "doc_id": f"P{doc_no:07d}", "firm_id": firm,
            "timestamp": datetime(announced.year, announced.month, announced.day, 7, 0).isoformat(),
            "source_type": "newswire", "source_name": "Business Wire", "relevance": 100,
            "tags": ["press releases", "company earnings"], "major_firm_count": 1,
            "raw_text": _render(toks, rng, lead=lead),
        })
        if ev["has_call"]:
            toks, _ = maker.tokens(ev["s_ec"], n=int(rng.integers(500, 800)), scored_share=0.12)
            lead = ". ".join(TRANSCRIPT_LINES) + "."
            doc_no += 1
            release_docs.append({
                "doc_id": f"T{doc_no:07d}", "firm_id": firm,
                "timestamp": datetime(announced.year, announced.month, announced.day, 17, 0).isoformat(),
                "source_type": "web", "source_name": "Call Transcripts", "relevance": 95,
                "tags": ["transcript"], "major_firm_count": 1,
                "raw_text": _render(toks, rng, lead=lead),
            })
        docs.extend(release_docs)
        gt_events.append({
            "firm": firm, "announce_date": announced.isoformat(), "true_event_date": tdays[ev["true_t"]].isoformat(),
            "sue": sue_val, "sue_z": ev["sue_z"], "press_sentiment": ev["s_pr"], "call_sentiment": ev["s_ec"],
            "media": ev["media"], "has_call": ev["has_call"],
        })

    noise_ids = _plant_noise(docs, cfg, rng, maker, firms, tdays)

    truth = {
        "seed": seed,
        "config": asdict(cfg),
        "word_scores": {s: float(z) for s, z in zip(stems, word_scores)},
        "words": dict(zip(stems, words)),
        "polarity": dict(zip(stems, polarity)),
        "text_scale": float(text_scale),
        "firm_beta": dict(zip(firms, beta.tolist())),
        "events": gt_events,
        "noise_docs": noise_ids,
        "n_documents": len(docs),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "docs.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for doc in docs:
                if isinstance(doc, str):
                    fh.write(doc + "\n")
                else:
                    fh.write(json.dumps(doc, sort_keys=True) + "\n")
        with open(out / "prices.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("firm,date,price,return,volume,shares,market_return\n")
            for k, firm in enumerate(firms):
                for t, d in enumerate(tdays):
                    fh.write(
                        f"{firm},{d.isoformat()},{_fmt(price[k, t])},{_fmt(ret[k, t])},{int(volume[k, t])},"
                        f"{int(shares[k])},{_fmt(r_m[t] / 100.0)}\n"
                    )
        with open(out / "caps.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("firm,date,cap\n")
            for k, firm in enumerate(firms):
                for t, d in enumerate(tdays):
                    fh.write(f"{firm},{d.isoformat()},{_fmt(price[k, t] * shares[k])}\n")
        with open(out / "earnings.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("firm,announce_date,eps,median_forecast,qend_price,roa,book,mcap,net_income,prior_assets\n")
            for r in sorted(earn_rows):
                fh.write(",".join([r[0], r[1]] + [_fmt(x) for x in r[2:]]) + "\n")
        with open(out / "forecasts.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("firm,announce_date,analyst,forecast_date,value\n")
            for r in sorted(fc_rows):
                fh.write(f"{r[0]},{r[1]},{r[2]},{r[3]},{_fmt(r[4])}\n")
        with open(out / "calendar.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("date\n")
            for d in tdays:
                fh.write(d.isoformat() + "\n")
        (out / "ground_truth.json").write_text(json.dumps(truth, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return truth


def _plant_noise(docs: list, cfg: SynthConfig, rng, maker: _TextMaker, firms, tdays) -> dict[str, list[str]]:
    """Append documents that screening or de-duplication must remove."""
    ids: dict[str, list[str]] = {}
    news = [d for d in docs if isinstance(d, dict) and d["doc_id"].startswith("N")]
    T = len(tdays)

    def fresh(tag: str, i: int, **over) -> dict:
        d = tdays[int(rng.integers(0, T))]
        toks, _ = maker.tokens(float(rng.normal()))
        doc = {
            "doc_id": f"X{tag[:2].upper()}{i:05d}",
            "firm_id": firms[int(rng.integers(len(firms)))],
            "timestamp": datetime(d.year, d.month, d.day, 12, 0).isoformat(),
            "source_type": "newswire", "source_name": "Reuters", "relevance": 90,
            "tags": ["company news"], "major_firm_count": 1,
            "raw_text": _render(toks, rng),
        }
        doc.update(over)
        return doc

    for kind in sorted(cfg.n_noise):
        n = cfg.n_noise[kind]
        ids[kind] = []
        for i in range(n):
            if kind == "short":
                toks, _ = maker.tokens(0.0, n=int(rng.integers(40, 150)))
                doc = fresh(kind, i, raw_text=_render(toks, rng))
            elif kind == "multi_firm":
                doc = fresh(kind, i, major_firm_count=int(rng.integers(3, 7)))
            elif kind == "excluded_tag":
                doc = fresh(kind, i, tags=["patents", "company news"])
            elif kind == "excluded_source":
                doc = fresh(kind, i, source_name="Midnight Trader - Live Briefs")
            elif kind == "low_relevance":
                doc = fresh(kind, i, relevance=int(rng.integers(30, 85)))
            elif kind == "machine_generated":
                toks, _ = maker.tokens(0.0, n=220)
                table = " ".join(f"{rng.uniform(0, 1000):.2f}" for _ in range(400))
                doc = fresh(kind, i, raw_text=_render(toks, rng) + " " + table)
            elif kind in ("exact_duplicate", "near_duplicate") and news:
                src = news[int(rng.integers(len(news)))]
                doc = dict(src)
                doc["doc_id"] = f"X{kind[:2].upper()}{i:05d}"
                ts = datetime.fromisoformat(src["timestamp"])
                doc["timestamp"] = (ts + timedelta(minutes=int(rng.integers(1, 30)))).isoformat()
                if kind == "near_duplicate":
                    words = src["raw_text"].split(" ")
                    # swap one word near the end: shingle Jaccard stays well above 0.9
                    pos = len(words) - 2
                    words[pos] = "revised" if words[pos] != "revised" else "updated"
                    doc["raw_text"] = " ".join(words)
            elif kind == "malformed":
                if i % 2 == 0:
                    doc = '{"doc_id": "XMALF' + f"{i:05d}" + '", "firm_id": '
                    docs.append(doc)
                    ids[kind].append(f"XMALF{i:05d}")
                    continue
                doc = {"doc_id": f"XMALF{i:05d}", "firm_id": firms[0], "source_type": "newswire"}
            else:
                continue
            docs.append(doc)
            ids[kind].append(doc["doc_id"])
    return ids


# ---------------------------------------------------------------------------
# in-memory generators


@dataclass
class LexiconPanel:
    rows: list[tuple[tuple[int, int], list[str]]]
    returns: dict[tuple[int, int], float]
    word_scores: dict[str, float]
    words: list[str]


def lexicon_panel(
    seed: int,
    n_firms: int = 50,
    n_days: int = 750,
    n_words: int = 50,
    text_sd: float = 1.0,
    noise_sd: float = 2.0,
    doc_rate: float = 1.2,
    doc_len: tuple[int, int] = (60, 140),
    scored_share: float = 0.3,
) -> LexiconPanel:
    """Token documents per (firm, day) and returns equal to planted text signal plus noise.

    Only newswire-style news documents are produced. Returns (percent) are
    ``scale * sum_j score_j freq_j + noise`` where ``freq`` is the firm-day average term
    frequency and ``scale`` sets the sd of the text part to ``text_sd``.
    """
    rng = np.random.default_rng(seed)
    word_scores = planted_scores(n_words, rng)
    words = np.array([f"w{j:03d}" for j in range(n_words)], dtype=object)
    fillers = np.array([f"x{j:03d}" for j in range(200)], dtype=object)
    base = rng.dirichlet(np.full(n_words, 5.0))
    rows = []
    sig = {}
    for k in range(n_firms):
        for t in range(n_days):
            nd = int(rng.poisson(doc_rate))
            if nd == 0:
                continue
            f = np.zeros(n_words)
            for _ in range(nd):
                n = int(rng.integers(doc_len[0], doc_len[1] + 1))
                m = int(rng.binomial(n, scored_share))
                p = rng.dirichlet(base * 40)
                counts = rng.multinomial(m, p)
                toks = np.concatenate([np.repeat(words, counts), rng.choice(fillers, size=n - m)])
                rows.append(((k, t), toks.tolist()))
                f += counts / n
            sig[(k, t)] = float(f @ word_scores) / nd
    keys = sorted(sig)
    raw = np.array([sig[key] for key in keys])
    c = text_sd / raw.std() if raw.std() > 0 else 0.0
    noise = rng.normal(0, noise_sd, len(keys)) if noise_sd > 0 else np.zeros(len(keys))
    rets = {key: float(c * s + e) for key, s, e in zip(keys, raw, noise)}
    return LexiconPanel(rows, rets, dict(zip(words.tolist(), word_scores.tolist())), words.tolist())


BASE_CONTROLS = ("sue", "epr_lm", "epr_gwp", "ec_lm", "ec_gwp", "cat_pre", "car_pre", "roa", "log_bm", "log_m")


def event_panel(
    seed: int,
    n_firms: int = 125,
    n_quarters: int = 56,
    rcat_car_event: float = 0.8,
    rcat_car_long: float = -0.35,
    null: bool = False,
    car_noise: float = 2.0,
    participation: float = 1.0,
) -> pd.DataFrame:
    """Event-level panel with planted media effects.

    ``cat_event`` is a linear function of the controls plus firm and quarter
    effects plus the media component ``media``; CAR windows load on ``media``
    with the planted slopes. With ``null`` set, every CAT window is drawn
    independently of the controls.
    """
    rng = np.random.default_rng(seed)
    quarters = [f"{2000 + q // 4}Q{q % 4 + 1}" for q in range(n_quarters)]
    firm_fe = rng.normal(0, 0.5, n_firms)
    q_fe = rng.normal(0, 0.5, n_quarters)
    firm_size = rng.normal(9.0, 1.0, n_firms)
    firm_bm = rng.normal(-0.8, 0.4, n_firms)
    rows = []
    for q in range(n_quarters):
        shock_q = rng.normal(0, 1.0)
        for k in range(n_firms):
            if participation < 1 and rng.random() > participation:
                continue
            sue_z = rng.normal() + 0.3 * shock_q
            sue = 0.004 * sue_z
            epr = 0.8 * sue_z + rng.normal(0, 0.6)
            ec = 0.6 * sue_z + 0.4 * epr + rng.normal(0, 0.6)
            rows.append({
                "firm_id": f"F{k:03d}",
                "year_quarter": quarters[q],
                "sue": sue,
                "epr_lm": 0.02 * epr + rng.normal(0, 0.01),
                "epr_gwp": 0.05 * epr + rng.normal(0, 0.02),
                "ec_lm": 0.02 * ec + rng.normal(0, 0.01),
                "ec_gwp": 0.05 * ec + rng.normal(0, 0.02),
                "cat_pre": rng.normal(0, 0.5) + 0.2 * shock_q,
                "car_pre": rng.normal(0, 3.0),
                "roa": rng.normal(0.02, 0.01),
                "log_bm": firm_bm[k] + rng.normal(0, 0.1),
                "log_m": firm_size[k] + rng.normal(0, 0.1),
                "media": rng.normal(),
                "_k": k,
                "_q": q,
            })
    df = pd.DataFrame(rows)
    n = len(df)
    fe = firm_fe[df["_k"]] + q_fe[df["_q"]]
    sue_z = df["sue"] / 0.004
    if null:
        df["cat_event"] = fe + rng.normal(0, 1.0, n)
        df["cat_short"] = fe + rng.normal(0, 1.0, n)
        df["cat_long"] = fe + rng.normal(0, 1.0, n)
    else:
        explained = (
            0.3 * sue_z + 10.0 * df["epr_gwp"] + 10.0 * df["ec_gwp"] + 5.0 * df["ec_lm"]
            + 0.2 * df["cat_pre"] + fe
        )
        df["cat_event"] = explained + df["media"]
        df["cat_short"] = 0.2 * df["cat_event"] + fe + rng.normal(0, 0.5, n)
        df["cat_long"] = 0.5 * df["cat_event"] + fe + rng.normal(0, 1.0, n)
    df["car_event"] = (
        rcat_car_event * df["media"] + 1.0 * sue_z + 0.1 * df["car_pre"] + firm_fe[df["_k"]] + rng.normal(0, car_noise, n)
    )
    df["car_short"] = 0.05 * df["car_event"] + rng.normal(0, car_noise, n)
    df["car_long"] = rcat_car_long * df["media"] + 0.1 * df["car_event"] + q_fe[df["_q"]] + rng.normal(0, car_noise, n)
    df["cast_pre"] = rng.normal(0, 0.5, n)
    df["cast_event"] = 0.3 * df["media"].abs() + 0.5 * df["cast_pre"] + rng.normal(0, 0.5, n)
    df["nw_share"] = rng.uniform(0.2, 0.8, n)
    df["event_id"] = df["firm_id"] + ":" + df["year_quarter"]
    return df.drop(columns=["_k", "_q"])


@dataclass
class EventTones:
    event_id: str
    tone: dict[int, float]
    factor: dict[int, float]
    articles: list  # list[ArticleTone]
    explained: float


def random_event_tones(seed: int, n_events: int = 1000, gap_rate: float = 0.3) -> list[EventTones]:
    """Events with gappy daily tone built from per-article tones over days -35..20."""
    from .abnormal import ArticleTone

    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_events):
        a, b = rng.normal(0, 0.2), rng.normal(0.8, 0.3)
        factor, tone, arts = {}, {}, []
        for tau in range(-35, 21):
            factor[tau] = float(rng.normal(0, 0.5))
            if tau >= -1 and tau <= 1 and rng.random() < 0.2:
                pass
            elif rng.random() < gap_rate:
                continue
            nd = int(rng.integers(1, 5))
            vals = a + b * factor[tau] + rng.normal(0, 0.3, nd)
            for d_i, v in enumerate(vals):
                src = ("newswire", "newspaper", "web")[int(rng.integers(3))]
                arts.append(ArticleTone(f"E{i:04d}D{tau + 35:02d}{d_i}", tau, float(v), src))
            tone[tau] = float(np.mean(vals))
        # ensure the estimation window has enough days and the event window has articles
        for tau in list(range(-35, -24)) + [0]:
            if tau not in tone:
                v = float(a + b * factor[tau] + rng.normal(0, 0.3))
                arts.append(ArticleTone(f"E{i:04d}D{tau + 35:02d}0", tau, v, "newswire"))
                tone[tau] = v
        out.append(EventTones(f"E{i:04d}", tone, factor, arts, float(rng.normal(0, 0.5))))
    return out
