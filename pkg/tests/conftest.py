from datetime import date, datetime, timedelta

import numpy as np
import pytest

from mediatone.corpus import Document
from mediatone.synth import SynthConfig, generate_synthetic_market
from mediatone.trading_calendar import TradingCalendar

_SYLLABLES = ["ba", "co", "di", "fu", "ga", "ke", "lo", "mi", "nu", "pa", "ro", "si", "tu", "ve", "zo"]
FILLER = sorted({a + b + c for a in _SYLLABLES for b in _SYLLABLES for c in ("n", "r", "t", "l")})


def make_text(n_words: int, seed: int = 0, extra: str = "") -> str:
    rng = np.random.default_rng(seed)
    words = [FILLER[i] for i in rng.integers(0, len(FILLER), n_words)]
    return (extra + " " if extra else "") + " ".join(words) + "."


def make_doc(doc_id="d1", firm_id="F1", ts=datetime(2005, 3, 1, 9), source_type="newswire", relevance=100,
             tags=(), major_firm_count=1, raw_text=None, n_words=250, seed=0, source_name="Wire") -> Document:
    return Document(
        doc_id=doc_id, firm_id=firm_id, timestamp=ts, source_type=source_type, relevance=relevance,
        tags=frozenset(tags), major_firm_count=major_firm_count,
        raw_text=raw_text if raw_text is not None else make_text(n_words, seed), source_name=source_name,
    )


def weekday_calendar(start: date, n: int) -> TradingCalendar:
    days, d = [], start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return TradingCalendar(days)


@pytest.fixture
def calendar():
    return weekday_calendar(date(2005, 1, 3), 300)


@pytest.fixture(scope="session")
def small_market(tmp_path_factory):
    """A small synthetic market written to disk once per session."""
    out = tmp_path_factory.mktemp("market")
    cfg = SynthConfig(n_firms=6, n_days=520, news_rate=0.6)
    truth = generate_synthetic_market(11, cfg, out)
    return out, truth


STUDY_CONFIG = {"rcat_min_history": 6}


@pytest.fixture(scope="session")
def study_market(tmp_path_factory):
    """Synthetic market large enough to fill every table once the residual-tone history is shortened."""
    out = tmp_path_factory.mktemp("study_market")
    generate_synthetic_market(3, SynthConfig(n_firms=10, n_days=1000), out)
    return out


@pytest.fixture(scope="session")
def study_run(study_market, tmp_path_factory):
    from mediatone.pipeline import StudyInputs, run_study
    from mediatone.study import StudyConfig

    out = tmp_path_factory.mktemp("study_out")
    result = run_study(StudyInputs.from_dir(study_market), out, StudyConfig(**STUDY_CONFIG))
    return out, result
