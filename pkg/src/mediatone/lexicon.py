"""Return-calibrated word scores (generalized word power) and static lexicon tone."""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .errors import InsufficientData, NoDocuments, NoScoredWords, SingularDesign
from .stemmer import porter_stem

log = logging.getLogger(__name__)

# ridge is used instead of OLS above this condition number of the column-scaled design
MAX_CONDITION = 1e8


@dataclass
class LexiconModel:
    train_start: date | None
    train_end: date | None
    scores: dict[str, float]
    vocab_day_counts: dict[str, int] = field(default_factory=dict)
    standardized: bool = True
    min_days: int = 200
    ridge_lambda: float = 0.0
    n_obs: int = 0

    def __len__(self) -> int:
        return len(self.scores)

    def scaled(self, c: float) -> "LexiconModel":
        return LexiconModel(
            self.train_start, self.train_end, {w: c * s for w, s in self.scores.items()},
            dict(self.vocab_day_counts), False, self.min_days, self.ridge_lambda, self.n_obs,
        )

    def save(self, path: str | Path) -> None:
        """Write ``word,score`` CSV plus a ``.json`` sidecar with provenance."""
        path = Path(path)
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write("word,score\n")
            for w in sorted(self.scores):
                fh.write(f"{w},{self.scores[w]!r}\n")
        meta = {
            "train_start": self.train_start.isoformat() if self.train_start else None,
            "train_end": self.train_end.isoformat() if self.train_end else None,
            "min_days": self.min_days,
            "ridge_lambda": self.ridge_lambda,
            "standardized": self.standardized,
            "n_obs": self.n_obs,
            "vocab_day_counts": {w: self.vocab_day_counts[w] for w in sorted(self.vocab_day_counts)},
        }
        path.with_suffix(".json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "LexiconModel":
        path = Path(path)
        scores = {}
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                scores[row["word"]] = float(row["score"])
        meta_path = path.with_suffix(".json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}

        def _d(s):
            return date.fromisoformat(s) if s else None

        return cls(
            train_start=_d(meta.get("train_start")),
            train_end=_d(meta.get("train_end")),
            scores=scores,
            vocab_day_counts=meta.get("vocab_day_counts", {}),
            standardized=meta.get("standardized", True),
            min_days=meta.get("min_days", 200),
            ridge_lambda=meta.get("ridge_lambda", 0.0),
            n_obs=meta.get("n_obs", 0),
        )


@dataclass
class StaticLexicon:
    positive: frozenset[str]
    negative: frozenset[str]


@dataclass
class SeedLexicon:
    """Stemmed candidate words for calibration plus the static polarity lists."""

    candidates: frozenset[str]
    static: StaticLexicon


def load_seed_lexicon(path: str | Path | None = None) -> SeedLexicon:
    """Read a ``word,polarity`` CSV (polarity positive/negative/blank) and stem it.

    Stems claimed by both polarities are dropped from the static lists.
    """
    if path is None:
        text = resources.files("mediatone.data").joinpath("seed_lexicon.csv").read_text()
    else:
        text = Path(path).read_text(encoding="utf-8")
    pos, neg, cands = set(), set(), set()
    for row in csv.DictReader(text.splitlines()):
        word = row["word"].strip().lower()
        if not word.isalpha():
            continue
        stem = porter_stem(word)
        cands.add(stem)
        pol = (row.get("polarity") or "").strip().lower()
        if pol == "positive":
            pos.add(stem)
        elif pol == "negative":
            neg.add(stem)
    conflicts = pos & neg
    if conflicts:
        log.warning("dropping %d stems with conflicting polarity: %s", len(conflicts), sorted(conflicts))
    return SeedLexicon(
        candidates=frozenset(cands),
        static=StaticLexicon(frozenset(pos - conflicts), frozenset(neg - conflicts)),
    )


# ---------------------------------------------------------------------------
# vocabulary and frequency tables


def word_day_counts(
    day_docs: Iterable[tuple[Hashable, Sequence[str]]],
    candidates: Iterable[str],
) -> Counter:
    """Number of distinct (firm, day) keys on which each candidate word occurs."""
    cand = frozenset(candidates)
    seen: dict[str, set] = defaultdict(set)
    for key, tokens in day_docs:
        for w in cand.intersection(tokens):
            seen[w].add(key)
    return Counter({w: len(keys) for w, keys in seen.items()})


def build_vocab(
    day_docs: Iterable[tuple[Hashable, Sequence[str]]],
    candidates: Iterable[str],
    min_days: int = 200,
) -> set[str]:
    """Candidate words seen on at least ``min_days`` distinct (firm, day) keys.

    ``day_docs`` yields ``((firm, day), tokens)`` pairs, one per document.
    """
    counts = word_day_counts(day_docs, candidates)
    return {w for w, n in counts.items() if n >= min_days}


@dataclass
class FrequencyTable:
    """Average term frequencies f(j, k, t) per (firm, day) row.

    ``matrix[r, j]`` is the mean over the row's documents of FQ/N for word
    ``words[j]``; only documents with at least one vocabulary word count.
    """

    keys: list[tuple]
    words: list[str]
    matrix: sparse.csr_matrix
    doc_counts: np.ndarray


def frequency_table(
    day_docs: Iterable[tuple[Hashable, Sequence[str]]],
    vocab: Iterable[str],
) -> FrequencyTable:
    words = sorted(vocab)
    col = {w: j for j, w in enumerate(words)}
    acc: dict[Hashable, dict[int, float]] = {}
    ndocs: Counter = Counter()
    for key, tokens in day_docs:
        n = len(tokens)
        if n == 0:
            continue
        hits = Counter(t for t in tokens if t in col)
        if not hits:
            continue
        row = acc.setdefault(key, defaultdict(float))
        for w, c in hits.items():
            row[col[w]] += c / n
        ndocs[key] += 1
    keys = sorted(acc)
    data, indices, indptr = [], [], [0]
    for key in keys:
        row = acc[key]
        d = ndocs[key]
        for j in sorted(row):
            indices.append(j)
            data.append(row[j] / d)
        indptr.append(len(indices))
    mat = sparse.csr_matrix(
        (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(keys), len(words)),
    )
    return FrequencyTable(keys, words, mat, np.array([ndocs[k] for k in keys], dtype=int))


# ---------------------------------------------------------------------------
# calibration


def _gcv_ridge(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Ridge on centered, column-scaled data with the penalty picked by GCV."""
    n = X.shape[0]
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    uty = U.T @ y
    resid_perp = float(y @ y - uty @ uty)
    grid = (s[0] ** 2) * np.logspace(-10, 1, 67)
    best = None
    for lam in grid:
        shrink = s**2 / (s**2 + lam)
        df = shrink.sum()
        rss = float(np.sum(((1 - shrink) * uty) ** 2)) + resid_perp
        gcv = n * rss / max(n - df, 1e-12) ** 2
        if best is None or gcv < best[0]:
            best = (gcv, lam)
    lam = best[1]
    coef = Vt.T @ (s / (s**2 + lam) * uty)
    return coef, float(lam)


def fit_word_slopes(
    X: np.ndarray,
    y: np.ndarray,
    intercept: bool = True,
    ridge: str | float | None = "auto",
) -> tuple[np.ndarray, float]:
    """Slopes of ``y`` on the columns of ``X``; returns (slopes, ridge lambda used).

    ``ridge="auto"`` uses least squares unless the design has fewer than 2J
    rows or its column-scaled condition number exceeds ``MAX_CONDITION``, in
    which case a GCV-tuned ridge is used. ``ridge=None`` forces least squares.
    A float forces ridge with that penalty (on column-scaled data).
    """
    n, J = X.shape
    if intercept:
        Xc = X - X.mean(axis=0)
        yc = y - y.mean()
    else:
        Xc, yc = X, y
    scale = np.sqrt((Xc**2).sum(axis=0))
    zero = scale == 0
    scale[zero] = 1.0
    Xs = Xc / scale
    rank_ok = n >= J + int(intercept) and not zero.any()
    if rank_ok:
        sv = np.linalg.svd(Xs, compute_uv=False)
        cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    else:
        cond = np.inf

    if ridge is None:
        if n < J + int(intercept):
            raise InsufficientData(f"{n} observations for {J} words without ridge")
        if not np.isfinite(cond) or cond > 1e14:
            raise SingularDesign(f"design is singular (condition {cond:.3g})")
        coef, *_ = np.linalg.lstsq(Xs, yc, rcond=None)
        return coef / scale, 0.0
    if ridge == "auto":
        if n >= 2 * J and cond <= MAX_CONDITION:
            coef, *_ = np.linalg.lstsq(Xs, yc, rcond=None)
            return coef / scale, 0.0
        coef, lam = _gcv_ridge(Xs, yc)
        return coef / scale, lam
    lam = float(ridge)
    U, s, Vt = np.linalg.svd(Xs, full_matrices=False)
    coef = Vt.T @ (s / (s**2 + lam) * (U.T @ yc))
    return coef / scale, lam


def standardize_scores(b: np.ndarray) -> np.ndarray:
    """Cross-sectional z-score (population standard deviation)."""
    sd = b.std()
    if sd == 0 or not np.isfinite(sd):
        return np.zeros_like(b)
    return (b - b.mean()) / sd


def calibrate(
    table: FrequencyTable,
    returns: Mapping[tuple, float],
    intercept: bool = True,
    ridge: str | float | None = "auto",
    standardize: bool = True,
    train_start: date | None = None,
    train_end: date | None = None,
    min_days: int = 200,
    vocab_day_counts: Mapping[str, int] | None = None,
) -> LexiconModel:
    """Regress same-day returns on average term frequencies and turn slopes into scores.

    Rows of ``table`` without a return in ``returns`` are skipped. Scores are
    the slopes standardized across words when ``standardize`` is set.
    """
    rows = [i for i, k in enumerate(table.keys) if k in returns and np.isfinite(returns[k])]
    if not rows:
        raise InsufficientData("no frequency rows have a matching return")
    X = table.matrix[rows].toarray()
    y = np.array([returns[table.keys[i]] for i in rows], dtype=float)
    slopes, lam = fit_word_slopes(X, y, intercept=intercept, ridge=ridge)
    scores = standardize_scores(slopes) if standardize else slopes
    return LexiconModel(
        train_start=train_start,
        train_end=train_end,
        scores={w: float(s) for w, s in zip(table.words, scores)},
        vocab_day_counts=dict(vocab_day_counts or {}),
        standardized=standardize,
        min_days=min_days,
        ridge_lambda=lam,
        n_obs=len(rows),
    )


# ---------------------------------------------------------------------------
# scoring


def _tokens(doc) -> Sequence[str]:
    return doc if isinstance(doc, (list, tuple)) else doc.tokens


def doc_tone(doc, lex: LexiconModel | Mapping[str, float]) -> float:
    """Score-weighted term frequency of one document, sum_j score_j * FQ_j / N.

    Unscored words count in N. Raises ``NoScoredWords`` when no lexicon word occurs.
    """
    scores = lex.scores if isinstance(lex, LexiconModel) else lex
    tokens = _tokens(doc)
    total = 0.0
    hit = False
    for t in tokens:
        s = scores.get(t)
        if s is not None:
            total += s
            hit = True
    if not hit:
        raise NoScoredWords("document contains no lexicon word")
    return total / len(tokens)


def daily_tone(docs: Iterable, lex: LexiconModel | Mapping[str, float]) -> float:
    """Firm-day tone: mean document tone over documents with a scored word."""
    tones = []
    for d in docs:
        try:
            tones.append(doc_tone(d, lex))
        except NoScoredWords:
            continue
    if not tones:
        raise NoDocuments("no document with a scored word")
    return float(np.mean(tones))


def lm_tone(doc, lex: StaticLexicon) -> float:
    """Net static-lexicon hits over document length, (pos - neg) / N."""
    tokens = _tokens(doc)
    if not tokens:
        return 0.0
    pos = sum(t in lex.positive for t in tokens)
    neg = sum(t in lex.negative for t in tokens)
    return (pos - neg) / len(tokens)


# ---------------------------------------------------------------------------
# corpus-level calibration


def market_adjusted_returns(prices) -> dict[tuple[str, date], float]:
    """Same-day ``(return - market_return)`` in percent keyed by (firm, date).

    ``prices`` is a frame with ``firm``, ``date``, ``return`` and ``market_return``.
    """
    ok = prices["return"].notna() & prices["market_return"].notna()
    sub = prices.loc[ok]
    vals = (sub["return"].to_numpy(float) - sub["market_return"].to_numpy(float)) * 100.0
    return dict(zip(zip(sub["firm"].astype(str), sub["date"]), vals.tolist()))


def training_rows(docs: Iterable, calendar, start: date | None, end: date) -> list[tuple[tuple[str, date], Sequence[str]]]:
    """((firm, trading day), tokens) for newswire news documents dated in [start, end].

    Documents on non-trading days count toward the next trading day.
    """
    rows = []
    for doc in docs:
        if doc.source_type != "newswire" or doc.kind not in ("news", None):
            continue
        if doc.day > end or (start is not None and doc.day < start):
            continue
        tday = calendar.roll_forward(doc.day)
        if tday is None:
            continue
        rows.append(((doc.firm_id, tday), doc.tokens))
    rows.sort(key=lambda r: r[0])
    return rows


def calibrate_corpus(
    docs: Sequence,
    returns: Mapping[tuple, float],
    calendar,
    candidates: Iterable[str],
    train_end: date,
    train_start: date | None = None,
    min_days: int = 200,
    ridge: str | float | None = "auto",
    standardize: bool = True,
) -> LexiconModel:
    """Vocabulary filter, frequency table and return regression over one training window."""
    rows = training_rows(docs, calendar, train_start, train_end)
    counts = word_day_counts(rows, candidates)
    vocab = {w for w, n in counts.items() if n >= min_days}
    if not vocab:
        raise InsufficientData(f"no candidate word reaches {min_days} firm-days before {train_end}")
    table = frequency_table(rows, vocab)
    return calibrate(
        table, returns, ridge=ridge, standardize=standardize, train_start=train_start,
        train_end=train_end, min_days=min_days,
        vocab_day_counts={w: counts[w] for w in vocab},
    )


def expanding_lexicons(
    docs: Sequence,
    returns: Mapping[tuple, float],
    calendar,
    candidates: Iterable[str],
    min_days: int = 200,
    ridge: str | float | None = "auto",
) -> list[LexiconModel]:
    """One lexicon per calendar year end, each trained on all data up to that year end.

    The lexicon ending in year Y scores documents of year Y + 1. The last
    year of data only trains a model when a later year exists to score.
    """
    candidates = frozenset(candidates)
    years = sorted({d.day.year for d in docs})
    start = min(d.day for d in docs) if docs else None
    out = []
    for y in years[:-1]:
        end = date(y, 12, 31)
        try:
            out.append(calibrate_corpus(docs, returns, calendar, candidates, end, start, min_days, ridge))
        except InsufficientData as exc:
            log.warning("no lexicon for %d: %s", y, exc)
    return out
