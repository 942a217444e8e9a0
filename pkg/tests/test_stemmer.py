from pathlib import Path

import pytest

from mediatone.stemmer import porter_stem

VOCAB = Path(__file__).parent / "data" / "porter_vocabulary.tsv"


def _pairs():
    with open(VOCAB, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            word, stem = line.rstrip("\n").split("\t")
            yield word, stem


@pytest.mark.parametrize(
    "word,stem",
    [("caresses", "caress"), ("ponies", "poni"), ("a", "a"), ("running", "run"), ("runs", "run"),
     ("relational", "relat"), ("generalization", "gener"), ("hopeful", "hope"), ("sky", "sky")],
)
def test_known_stems(word, stem):
    assert porter_stem(word) == stem


def test_canonical_vocabulary_agreement():
    pairs = list(_pairs())
    assert len(pairs) == 25000
    misses = [(w, s, porter_stem(w)) for w, s in pairs if porter_stem(w) != s]
    assert len(misses) / len(pairs) <= 0.001, misses[:10]


@pytest.mark.parametrize("word", ["", "a", "is", "by"])
def test_short_words_pass_through(word):
    assert porter_stem(word) == word
