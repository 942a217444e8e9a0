import json

import numpy as np
import pandas as pd
import pytest

from mediatone.errors import InvalidConfig
from mediatone.synth import SynthConfig, event_panel, generate_synthetic_market, lexicon_panel, random_event_tones


def test_market_files_deterministic(small_market, tmp_path):
    out, truth = small_market
    again = generate_synthetic_market(11, SynthConfig(n_firms=6, n_days=520, news_rate=0.6), tmp_path)
    assert json.dumps(again, sort_keys=True) == json.dumps(truth, sort_keys=True)
    for name in ("docs.jsonl", "prices.csv", "earnings.csv", "forecasts.csv", "calendar.csv", "caps.csv"):
        assert (out / name).read_bytes() == (tmp_path / name).read_bytes(), name


def test_seed_changes_output(tmp_path):
    a = generate_synthetic_market(1, SynthConfig(n_firms=2, n_days=300), tmp_path / "a")
    b = generate_synthetic_market(2, SynthConfig(n_firms=2, n_days=300), tmp_path / "b")
    assert (tmp_path / "a" / "prices.csv").read_bytes() != (tmp_path / "b" / "prices.csv").read_bytes()
    assert a["n_documents"] > 0 and b["n_documents"] > 0


def test_prices_schema(small_market):
    out, _ = small_market
    prices = pd.read_csv(out / "prices.csv")
    assert list(prices.columns) == ["firm", "date", "price", "return", "volume", "shares", "market_return"]
    assert (prices.price > 0).all() and (prices.shares > 0).all()


@pytest.mark.parametrize(
    "kwargs",
    [{"n_firms": 0}, {"n_days": 100}, {"n_words": 1}, {"scored_share": 1.0}, {"newswire_share": 0.8},
     {"quarter_gap": 40}, {"start": "yesterday"}, {"doc_words": (300, 200)}],
)
def test_invalid_synth_config(kwargs):
    with pytest.raises(InvalidConfig):
        SynthConfig(**kwargs).validate()


def test_unknown_synth_key():
    with pytest.raises(InvalidConfig):
        SynthConfig.from_dict({"n_firm": 3})


def test_panels_deterministic():
    pd.testing.assert_frame_equal(event_panel(5, n_firms=10, n_quarters=4), event_panel(5, n_firms=10, n_quarters=4))
    a, b = random_event_tones(3, 20), random_event_tones(3, 20)
    assert [e.tone for e in a] == [e.tone for e in b]
    p = lexicon_panel(2, n_firms=5, n_days=50)
    q = lexicon_panel(2, n_firms=5, n_days=50)
    assert p.word_scores == q.word_scores and p.returns == q.returns
