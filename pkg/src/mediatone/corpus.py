"""Document ingestion: cleaning, screening, de-duplication and classification."""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import date, datetime
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .minhash import LSHIndex, MinHasher, jaccard, shingles
from .stemmer import porter_stem

log = logging.getLogger(__name__)

SOURCE_TYPES = ("newswire", "newspaper", "web")
NEWS = "news"
PRESS_RELEASE = "earnings_press_release"
CALL_TRANSCRIPT = "earnings_call_transcript"
DOC_KINDS = (NEWS, PRESS_RELEASE, CALL_TRANSCRIPT)

# rejection counters, in the order rules are evaluated
FILTER_RULES = (
    "malformed",
    "source_type",
    "relevance",
    "multi_firm",
    "excluded_tag",
    "excluded_source",
    "min_words",
    "machine_generated",
)


@dataclass
class Document:
    doc_id: str
    firm_id: str
    timestamp: datetime
    source_type: str
    relevance: int
    tags: frozenset[str]
    major_firm_count: int
    raw_text: str
    source_name: str = ""
    tokens: list[str] | None = None
    n_words: int | None = None
    kind: str | None = None
    rule_trace: list[str] = field(default_factory=list)

    @property
    def day(self) -> date:
        return self.timestamp.date()

    @classmethod
    def from_record(cls, rec: dict) -> "Document":
        """Build from a JSON record; raises ``ValueError`` on malformed input."""
        try:
            raw = rec["raw_text"]
            if not isinstance(raw, str):
                raise ValueError("raw_text must be a string")
            ts = rec["timestamp"]
            timestamp = ts if isinstance(ts, datetime) else datetime.fromisoformat(str(ts))
            tags = rec.get("tags") or []
            if isinstance(tags, str):
                tags = [tags]
            relevance = int(rec["relevance"])
            mfc = int(rec.get("major_firm_count", 1))
            if not 0 <= relevance <= 100 or mfc < 1:
                raise ValueError("relevance or major_firm_count out of range")
            doc = cls(
                doc_id=str(rec["doc_id"]),
                firm_id=str(rec["firm_id"]),
                timestamp=timestamp,
                source_type=str(rec["source_type"]).lower(),
                relevance=relevance,
                tags=frozenset(str(t).lower() for t in tags),
                major_firm_count=mfc,
                raw_text=raw,
                source_name=str(rec.get("source_name", "") or ""),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed document record: {exc!r}") from exc
        if rec.get("tokens") is not None:
            doc.tokens = list(rec["tokens"])
            doc.n_words = int(rec.get("n_words", len(doc.tokens)))
        if rec.get("kind"):
            doc.kind = rec["kind"]
            doc.rule_trace = list(rec.get("rule_trace", []))
        return doc

    def to_record(self) -> dict:
        rec = {
            "doc_id": self.doc_id,
            "firm_id": self.firm_id,
            "timestamp": self.timestamp.isoformat(),
            "source_type": self.source_type,
            "relevance": self.relevance,
            "tags": sorted(self.tags),
            "major_firm_count": self.major_firm_count,
            "source_name": self.source_name,
            "raw_text": self.raw_text,
        }
        if self.tokens is not None:
            rec["n_words"] = self.n_words
            rec["tokens"] = self.tokens
        if self.kind is not None:
            rec["kind"] = self.kind
            rec["rule_trace"] = self.rule_trace
        return rec


@dataclass(frozen=True)
class DocClass:
    kind: str
    rule_trace: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# text cleaning

_URL_RE = re.compile(
    r"(?:https?://|ftp://|www\.)\S+"
    r"|\S+@\S+\.[a-z]{2,}"
    r"|\b(?:[a-z0-9-]+\.)+(?:com|org|net|edu|gov|co|io|biz|info|us|uk)\b(?:/\S*)?",
    re.IGNORECASE,
)
# cheap test for anything _URL_RE could match
_URL_HINT_RE = re.compile(r"://|www\.|@|\.(?:com|org|net|edu|gov|co|io|biz|info|us|uk)\b", re.IGNORECASE)
_POSSESSIVE_RE = re.compile(r"['’]s\b")
_APOSTROPHE_RE = re.compile(r"['’]")
_DIGIT_TOKEN_RE = re.compile(r"\S*\d\S*")
_WORD_RE = re.compile(r"[a-z]+")
_DIGIT_RE = re.compile(r"\d")


def normalize_words(raw: str) -> list[str]:
    """Lowercase alphabetic words of ``raw`` with URLs, numbers and punctuation removed.

    Tokens containing a digit are dropped whole; possessive ``'s`` is dropped
    and other apostrophes are deleted in place, so "don't" becomes "dont".
    """
    if not raw:
        return []
    if raw.isascii():
        text = raw.lower()
    else:
        text = unicodedata.normalize("NFKD", raw)
        text = "".join(ch for ch in text if not unicodedata.combining(ch)).lower()
    if _URL_HINT_RE.search(text):
        text = _URL_RE.sub(" ", text)
    text = _POSSESSIVE_RE.sub("", text)
    text = _APOSTROPHE_RE.sub("", text)
    if _DIGIT_RE.search(text):
        text = _DIGIT_TOKEN_RE.sub(" ", text)
    return _WORD_RE.findall(text)


def clean_text(raw: str) -> list[str]:
    """Normalized words of ``raw``, each replaced by its Porter root."""
    return [porter_stem(w) for w in normalize_words(raw)]


def word_count(raw: str) -> int:
    """Pre-stemming alphabetic word count used by the minimum-length screen."""
    return len(normalize_words(raw))


def prepare(doc: Document) -> Document:
    words = normalize_words(doc.raw_text)
    doc.n_words = len(words)
    doc.tokens = [porter_stem(w) for w in words]
    return doc


# ---------------------------------------------------------------------------
# screening


@dataclass
class FilterConfig:
    min_words: int = 200
    max_major_firms: int = 2
    min_relevance: int = 85
    allowed_sources: frozenset[str] = frozenset(SOURCE_TYPES)
    excluded_tags: frozenset[str] = frozenset({"patents", "patent"})
    excluded_source_names: frozenset[str] = frozenset(
        {"midnight trader - live briefs", "news bites - us markets"}
    )
    max_digit_ratio: float = 0.25
    min_distinct_ratio: float = 0.2


_SPACE_RE = re.compile(r"\s")


def digit_ratio(raw: str) -> float:
    """Share of non-whitespace characters that are digits."""
    visible = len(raw) - len(_SPACE_RE.findall(raw))
    if visible == 0:
        return 0.0
    return len(_DIGIT_RE.findall(raw)) / visible


def rejection_reason(doc: Document, cfg: FilterConfig) -> str | None:
    """Name of the first screening rule the document fails, or None."""
    if doc.source_type not in cfg.allowed_sources:
        return "source_type"
    if doc.relevance < cfg.min_relevance:
        return "relevance"
    if doc.major_firm_count > cfg.max_major_firms:
        return "multi_firm"
    if doc.tags & cfg.excluded_tags:
        return "excluded_tag"
    if doc.source_name.lower() in cfg.excluded_source_names:
        return "excluded_source"
    if doc.tokens is None:
        prepare(doc)
    if doc.n_words < cfg.min_words:
        return "min_words"
    if digit_ratio(doc.raw_text) > cfg.max_digit_ratio:
        return "machine_generated"
    if len(set(doc.tokens)) < cfg.min_distinct_ratio * len(doc.tokens):
        return "machine_generated"
    return None


def filter_corpus(
    docs: Iterable[Document | dict],
    cfg: FilterConfig | None = None,
    stats: Counter | None = None,
) -> Iterator[Document]:
    """Yield documents passing every screen; count rejections per rule in ``stats``.

    Records that are dicts are parsed first and counted as ``malformed`` when
    they cannot be. ``stats["input"]`` counts every record seen.
    """
    cfg = cfg or FilterConfig()
    stats = stats if stats is not None else Counter()
    for rec in docs:
        stats["input"] += 1
        if isinstance(rec, Document):
            doc = rec
        else:
            try:
                doc = Document.from_record(rec)
            except ValueError:
                stats["malformed"] += 1
                continue
        reason = rejection_reason(doc, cfg)
        if reason is not None:
            stats[reason] += 1
            continue
        yield doc


# ---------------------------------------------------------------------------
# de-duplication


def _sort_key(doc: Document):
    return (doc.timestamp, doc.doc_id)


def dedup_corpus(
    docs: Iterable[Document],
    threshold: float = 0.9,
    shingle_size: int = 5,
    num_perm: int = 128,
    bands: int = 16,
    seed: int = 1,
    stats: Counter | None = None,
) -> list[Document]:
    """Drop exact and near-duplicate documents, keeping the earliest of each group.

    Exact duplicates (identical token streams) are removed per firm across all
    days. Near duplicates are searched within (firm, calendar day) blocks: LSH
    proposes candidate pairs from MinHash signatures and a pair is linked when
    its exact shingle Jaccard is at least ``threshold``. Linked documents form
    groups by transitive closure and only the earliest by (timestamp, doc_id)
    survives. Output is sorted by (timestamp, doc_id).
    """
    stats = stats if stats is not None else Counter()
    ordered = sorted(docs, key=_sort_key)
    seen: dict[tuple, str] = {}
    unique: list[Document] = []
    for doc in ordered:
        if doc.tokens is None:
            prepare(doc)
        key = (doc.firm_id, tuple(doc.tokens))
        if key in seen:
            stats["exact_duplicate"] += 1
            continue
        seen[key] = doc.doc_id
        unique.append(doc)

    blocks: dict[tuple, list[Document]] = defaultdict(list)
    for doc in unique:
        blocks[(doc.firm_id, doc.day)].append(doc)

    hasher = MinHasher(num_perm=num_perm, seed=seed)
    dropped: set[str] = set()
    for block in blocks.values():
        if len(block) < 2:
            continue
        sh = [shingles(d.tokens, shingle_size) for d in block]
        index = LSHIndex(num_perm=num_perm, bands=bands)
        for i, s in enumerate(sh):
            index.insert(i, hasher.signature(s))
        parent = list(range(len(block)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i, j in sorted(index.candidate_pairs()):
            if jaccard(sh[i], sh[j]) >= threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    # block is time-sorted, so the smaller index is the earlier doc
                    parent[max(ri, rj)] = min(ri, rj)
        for i, doc in enumerate(block):
            if find(i) != i:
                dropped.add(doc.doc_id)
                stats["near_duplicate"] += 1
    return [d for d in unique if d.doc_id not in dropped]


# ---------------------------------------------------------------------------
# classification


@dataclass
class ClassifierConfig:
    press_release_tags: frozenset[str]
    contact_word: str
    negative_keywords: tuple[str, ...]
    transcript_tag: str
    press_release_terms: tuple[str, ...]
    transcript_terms: tuple[str, ...]

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ClassifierConfig":
        """Load from a JSON file; ``None`` loads the packaged default."""
        if path is None:
            text = resources.files("mediatone.data").joinpath("classifier.json").read_text()
        else:
            text = Path(path).read_text()
        raw = json.loads(text)
        return cls(
            press_release_tags=frozenset(t.lower() for t in raw["press_release_tags"]),
            contact_word=raw.get("contact_word", "contact").lower(),
            negative_keywords=tuple(k.lower() for k in raw.get("negative_keywords", [])),
            transcript_tag=raw.get("transcript_tag", "transcript").lower(),
            press_release_terms=tuple(clean_text(" ".join(raw.get("press_release_terms", [])))),
            transcript_terms=tuple(clean_text(" ".join(raw.get("transcript_terms", [])))),
        )


_CONTACT_CACHE: dict[str, re.Pattern] = {}


def _has_word(text: str, word: str) -> bool:
    pat = _CONTACT_CACHE.get(word)
    if pat is None:
        pat = _CONTACT_CACHE[word] = re.compile(rf"\b{re.escape(word)}\b", re.IGNORECASE)
    return pat.search(text) is not None


def classify_document(doc: Document, cfg: ClassifierConfig | None = None) -> DocClass:
    """Rule-based class of a single document, before per-firm-quarter resolution."""
    cfg = cfg or default_classifier()
    if cfg.transcript_tag in doc.tags:
        return DocClass(CALL_TRANSCRIPT, ("transcript_tag",))
    if doc.source_type != "newswire":
        return DocClass(NEWS)
    matched = sorted(doc.tags & cfg.press_release_tags)
    if not matched:
        return DocClass(NEWS)
    if not _has_word(doc.raw_text, cfg.contact_word):
        return DocClass(NEWS)
    lowered = doc.raw_text.lower()
    if any(k in lowered for k in cfg.negative_keywords):
        return DocClass(NEWS, ("negative_filter",))
    return DocClass(PRESS_RELEASE, (f"tag:{matched[0]}", "contact_word", "negative_filter_clear"))


def keyword_similarity(tokens: Sequence[str], terms: Sequence[str]) -> float:
    """Cosine similarity between a document's term counts and a reference term set."""
    if not tokens or not terms:
        return 0.0
    ref = Counter(terms)
    counts = Counter(t for t in tokens if t in ref)
    dot = sum(counts[t] * ref[t] for t in counts)
    norm_doc = np.sqrt(sum(v * v for v in Counter(tokens).values()))
    norm_ref = np.sqrt(sum(v * v for v in ref.values()))
    return float(dot / (norm_doc * norm_ref))


def year_quarter(d: date) -> str:
    return f"{d.year}Q{(d.month - 1) // 3 + 1}"


def classify_corpus(docs: Sequence[Document], cfg: ClassifierConfig | None = None) -> list[Document]:
    """Classify every document and keep one press release and one call per firm-quarter.

    Competing candidates are ranked by keyword similarity to the reference
    terms; ties go to the earliest (timestamp, doc_id). Losing candidates are
    reclassified as news.
    """
    cfg = cfg or default_classifier()
    groups: dict[tuple, list[Document]] = defaultdict(list)
    for doc in docs:
        if doc.tokens is None:
            prepare(doc)
        cls = classify_document(doc, cfg)
        doc.kind, doc.rule_trace = cls.kind, list(cls.rule_trace)
        if cls.kind != NEWS:
            groups[(doc.firm_id, year_quarter(doc.day), cls.kind)].append(doc)
    for (firm, yq, kind), cands in groups.items():
        if len(cands) < 2:
            continue
        terms = cfg.press_release_terms if kind == PRESS_RELEASE else cfg.transcript_terms
        scored = sorted(cands, key=lambda d: (-round(keyword_similarity(d.tokens, terms), 12), _sort_key(d)))
        best = scored[0]
        if len(scored) > 1 and round(keyword_similarity(scored[1].tokens, terms), 12) == round(
            keyword_similarity(best.tokens, terms), 12
        ):
            log.info("similarity tie for %s %s %s; keeping earliest %s", firm, yq, kind, best.doc_id)
        best.rule_trace.append("keyword_similarity_best")
        for loser in scored[1:]:
            loser.kind = NEWS
            loser.rule_trace = loser.rule_trace + [f"demoted:{kind}"]
    return list(docs)


_DEFAULT_CLASSIFIER: ClassifierConfig | None = None


def default_classifier() -> ClassifierConfig:
    global _DEFAULT_CLASSIFIER
    if _DEFAULT_CLASSIFIER is None:
        _DEFAULT_CLASSIFIER = ClassifierConfig.load()
    return _DEFAULT_CLASSIFIER


# ---------------------------------------------------------------------------
# end to end


def ingest(
    records: Iterable[dict],
    filter_cfg: FilterConfig | None = None,
    dedup_threshold: float = 0.9,
    classifier: ClassifierConfig | None = None,
    seed: int = 1,
) -> tuple[list[Document], Counter]:
    """Screen, de-duplicate and classify raw records.

    Returns the retained documents sorted by (timestamp, doc_id) and the
    rejection counts, where ``input == retained + sum(rejections)``.
    """
    stats: Counter = Counter()
    kept = list(filter_corpus(records, filter_cfg, stats))
    kept = dedup_corpus(kept, threshold=dedup_threshold, seed=seed, stats=stats)
    classify_corpus(kept, classifier)
    stats["retained"] = len(kept)
    return kept, stats


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError:
                yield {"__malformed__": line}


def write_jsonl(docs: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(json.dumps(doc.to_record(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def load_documents(path: str | Path) -> list[Document]:
    """Read an ingested JSONL file (tokens and kind already present)."""
    return [Document.from_record(rec) for rec in read_jsonl(path)]


def write_stats(stats: Counter, path: str | Path) -> None:
    rows = [("input", stats.get("input", 0))]
    rows += [(r, stats.get(r, 0)) for r in FILTER_RULES]
    rows += [("exact_duplicate", stats.get("exact_duplicate", 0)), ("near_duplicate", stats.get("near_duplicate", 0))]
    rows += [("retained", stats.get("retained", 0))]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("rule,count\n")
        for rule, count in rows:
            fh.write(f"{rule},{count}\n")
