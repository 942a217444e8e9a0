from datetime import date, datetime

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from mediatone.errors import InsufficientData, NoDocuments, NoScoredWords, SingularDesign
from mediatone.lexicon import (
    LexiconModel,
    StaticLexicon,
    build_vocab,
    calibrate,
    calibrate_corpus,
    daily_tone,
    doc_tone,
    fit_word_slopes,
    frequency_table,
    lm_tone,
    load_seed_lexicon,
    standardize_scores,
    word_day_counts,
)
from mediatone.synth import lexicon_panel

from conftest import make_doc, weekday_calendar


def _rows(word_days: dict[str, int]):
    rows = []
    for w, n in word_days.items():
        for t in range(n):
            rows.append((("F1", t), [w, "filler"]))
    return rows


@pytest.mark.parametrize("n_days,min_days,included", [(250, 200, True), (199, 200, False), (1, 1, True)])
def test_build_vocab_threshold(n_days, min_days, included):
    vocab = build_vocab(_rows({"gain": n_days}), {"gain"}, min_days)
    assert ("gain" in vocab) is included


def test_vocab_counts_distinct_firm_days():
    rows = [(("A", 1), ["gain"]), (("A", 1), ["gain"]), (("B", 1), ["gain"]), (("A", 2), ["loss"])]
    counts = word_day_counts(rows, {"gain", "loss", "flat"})
    assert counts == {"gain": 2, "loss": 1}


def test_frequency_table_averages_documents():
    rows = [(("A", 1), ["good", "x", "x", "x"]), (("A", 1), ["good", "bad"]), (("A", 2), ["x"])]
    tab = frequency_table(rows, {"good", "bad"})
    assert tab.keys == [("A", 1)]
    assert tab.words == ["bad", "good"]
    assert_allclose(tab.matrix.toarray(), [[(0 + 0.5) / 2, (0.25 + 0.5) / 2]])


def test_three_doc_frequencies_match_brute_force():
    lex = {"good": 1.5, "bad": -2.0}
    docs = [["good", "x", "bad", "good"], ["bad", "y"], ["good", "z", "z"]]
    tab = frequency_table([(("A", 1), d) for d in docs], lex)
    f = dict(zip(tab.words, tab.matrix.toarray()[0]))
    brute = sum(lex[w] * np.mean([d.count(w) / len(d) for d in docs]) for w in lex)
    assert sum(lex[w] * f[w] for w in lex) == pytest.approx(brute, abs=1e-12)
    assert daily_tone(docs, lex) == pytest.approx(brute, abs=1e-12)


# ---------------------------------------------------------------- calibration

def test_noiseless_recovery_exact():
    panel = lexicon_panel(0, n_firms=15, n_days=200, n_words=20, noise_sd=0.0)
    tab = frequency_table(panel.rows, panel.words)
    model = calibrate(tab, panel.returns, ridge=None)
    planted = standardize_scores(np.array([panel.word_scores[w] for w in tab.words]))
    assert_allclose([model.scores[w] for w in tab.words], planted, atol=1e-6)


def test_two_words_two_observations_exact():
    # with an intercept two rows cannot identify two slopes; the exactly determined
    # system is the no-intercept one
    rows = [(("A", 1), ["up", "up", "down", "x"]), (("A", 2), ["up", "down", "down", "down"])]
    returns = {("A", 1): 1.0, ("A", 2): -2.0}
    tab = frequency_table(rows, {"up", "down"})
    model = calibrate(tab, returns, intercept=False, ridge=None)
    X = tab.matrix.toarray()
    b = np.linalg.solve(X, [returns[k] for k in tab.keys])
    expect = (b - b.mean()) / b.std()
    assert_allclose([model.scores[w] for w in tab.words], expect, atol=1e-12)


def test_pure_noise_runs_and_standardizes():
    panel = lexicon_panel(4, n_firms=40, n_days=400, n_words=50, text_sd=0.0, noise_sd=2.0)
    tab = frequency_table(panel.rows, panel.words)
    assert tab.matrix.shape[0] >= 10_000
    model = calibrate(tab, panel.returns)
    s = np.array([model.scores[w] for w in tab.words])
    assert abs(s.mean()) < 1e-10 and abs(s.std() - 1) < 1e-10
    planted = np.array([panel.word_scores[w] for w in tab.words])
    assert abs(np.corrcoef(s, planted)[0, 1]) < 0.5


def test_auto_ridge_when_rows_scarce():
    rng = np.random.default_rng(0)
    X = rng.random((15, 10))
    y = rng.normal(size=15)
    _, lam = fit_word_slopes(X, y, ridge="auto")
    assert lam > 0
    X = rng.random((300, 10))
    y = X @ rng.normal(size=10) + rng.normal(size=300)
    _, lam = fit_word_slopes(X, y, ridge="auto")
    assert lam == 0


def test_no_ridge_errors():
    with pytest.raises(InsufficientData):
        fit_word_slopes(np.ones((3, 5)), np.zeros(3), ridge=None)
    X = np.random.default_rng(1).random((40, 3))
    X[:, 2] = X[:, 0]
    with pytest.raises(SingularDesign):
        fit_word_slopes(X, np.zeros(40), ridge=None)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=30))
def test_standardized_moments(values):
    b = np.array(values)
    z = standardize_scores(b)
    if b.std() > 1e-6 * max(1.0, np.abs(b).max()):
        assert abs(z.mean()) < 1e-10 and abs(z.std() - 1) < 1e-10
    assert np.isfinite(z).all()


def test_calibrate_corpus_uses_newswire_only(calendar):
    days = calendar.dates[:60]
    docs, returns = [], {}
    for i, d in enumerate(days):
        sign = 1 if i % 2 else -1
        text = ("gain " if sign > 0 else "loss ") * 20 + "filler " * 80
        docs.append(make_doc(f"n{i}", ts=datetime(d.year, d.month, d.day, 10), raw_text=text))
        docs.append(make_doc(f"p{i}", source_type="newspaper", ts=docs[-1].timestamp,
                             raw_text=("loss " if sign > 0 else "gain ") * 20 + "filler " * 80))
        returns[("F1", d)] = float(sign)
    from mediatone.corpus import prepare
    for doc in docs:
        prepare(doc)
    model = calibrate_corpus(docs, returns, calendar, {"gain", "loss"}, days[-1], min_days=10)
    assert model.scores["gain"] > model.scores["loss"]
    assert model.n_obs == 60
    assert model.train_end == days[-1]


# ---------------------------------------------------------------- scoring

def test_doc_tone_hand_example():
    assert doc_tone(["good", "good", "bad", "meh"], {"good": 2.0, "bad": -1.0}) == pytest.approx(0.75)


def test_doc_tone_no_hits():
    with pytest.raises(NoScoredWords):
        doc_tone(["meh"], {"good": 1.0})


def test_zero_scores_give_zero():
    assert doc_tone(["good", "bad"], {"good": 0.0, "bad": 0.0}) == 0.0


def test_daily_tone_cases():
    lex = {"good": 2.0, "bad": -1.0}
    d1 = ["good", "good", "bad", "meh"]
    assert daily_tone([d1], lex) == doc_tone(d1, lex)
    d_quarter = ["good", "bad", "bad", "meh"]  # 0.0
    d_half = ["good", "meh", "meh", "meh"]  # 0.5
    assert daily_tone([d1, d_quarter], lex) == pytest.approx(0.375)
    assert daily_tone([d_half, ["good", "bad", "meh", "meh"]], lex) == pytest.approx((0.5 + 0.25) / 2)
    with pytest.raises(NoDocuments):
        daily_tone([["meh"]], lex)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.sampled_from(["good", "bad", "meh", "okay"]), min_size=1, max_size=12), min_size=1, max_size=6))
def test_daily_tone_is_mean_of_doc_tones(docs):
    lex = {"good": 1.3, "bad": -0.7, "okay": 0.1}
    tones = []
    for d in docs:
        try:
            tones.append(doc_tone(d, lex))
        except NoScoredWords:
            pass
    if tones:
        assert daily_tone(docs, lex) == pytest.approx(np.mean(tones), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100))
def test_tone_scales_with_scores(c):
    model = LexiconModel(None, date(2004, 12, 31), {"good": 1.2, "bad": -0.4})
    toks = ["good", "bad", "bad", "x"]
    assert doc_tone(toks, model.scaled(c)) == pytest.approx(c * doc_tone(toks, model), rel=1e-12)


@pytest.mark.parametrize(
    "tokens,expected",
    [(["up"] * 2 + ["down"] + ["x"] * 7, 0.1), (["x", "y"], 0.0), (["up", "up", "up"], 1.0)],
)
def test_lm_tone(tokens, expected):
    lex = StaticLexicon(frozenset({"up"}), frozenset({"down"}))
    assert lm_tone(tokens, lex) == pytest.approx(expected)


def test_seed_lexicon_disjoint():
    seed = load_seed_lexicon()
    assert not seed.static.positive & seed.static.negative
    assert seed.static.positive <= seed.candidates


def test_seed_lexicon_conflicts_dropped(tmp_path):
    p = tmp_path / "seed.csv"
    p.write_text("word,polarity\ngain,positive\ngains,negative\nloss,negative\nprofit,\n")
    seed = load_seed_lexicon(p)
    assert "gain" not in seed.static.positive | seed.static.negative
    assert seed.static.negative == {"loss"}
    assert "profit" in seed.candidates


def test_model_save_load(tmp_path):
    m = LexiconModel(date(2001, 1, 2), date(2003, 12, 31), {"b": -0.5, "a": 0.25}, {"a": 300, "b": 250},
                     ridge_lambda=0.1, n_obs=99)
    m.save(tmp_path / "lexicon_2003.csv")
    back = LexiconModel.load(tmp_path / "lexicon_2003.csv")
    assert back == m
    assert (tmp_path / "lexicon_2003.csv").read_text().splitlines()[:2] == ["word,score", "a,0.25"]
