import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mediatone.minhash import LSHIndex, MinHasher, estimate_jaccard, jaccard, shingles
from mediatone.oracles import EmptyDoc, oracle_jaccard, oracle_shingles


def test_shingles_match_oracle():
    toks = "the quick brown fox jumps over the lazy dog again".split()
    assert {tuple(s.split()) for s in shingles(toks, 5)} == oracle_shingles(toks, 5)


def test_short_document_single_shingle():
    assert shingles(["a", "b"], 5) == {"a b"}
    assert shingles([], 5) == set()


def test_oracle_jaccard_cases():
    a = [f"w{i}" for i in range(30)]
    assert oracle_jaccard(a, a) == 1.0
    assert oracle_jaccard(a, [f"z{i}" for i in range(30)]) == 0.0
    with pytest.raises(EmptyDoc):
        oracle_jaccard(["x"], a)


def test_half_overlap_is_one_third():
    # two shingle sets of size 2k sharing k elements: |inter| = k, |union| = 3k
    k = 10
    a = {f"s{i}" for i in range(2 * k)}
    b = {f"s{i}" for i in range(k, 3 * k)}
    assert jaccard(a, b) == pytest.approx(1 / 3)


def test_signature_deterministic_across_instances():
    s = shingles([f"w{i}" for i in range(50)], 5)
    assert np.array_equal(MinHasher(128, seed=3).signature(s), MinHasher(128, seed=3).signature(s))


def test_minhash_mae_against_exact():
    rng = np.random.default_rng(0)
    hasher = MinHasher(128, seed=1)
    vocab = [f"w{i}" for i in range(500)]
    errs = []
    for _ in range(300):
        base = [vocab[i] for i in rng.integers(0, 500, 120)]
        other = list(base)
        for i in rng.choice(120, int(rng.integers(0, 120)), replace=False):
            other[i] = vocab[int(rng.integers(500))]
        exact = oracle_jaccard(base, other, 5)
        est = estimate_jaccard(hasher.signature(shingles(base, 5)), hasher.signature(shingles(other, 5)))
        errs.append(abs(est - exact))
    assert np.mean(errs) < 0.05


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from(list("abcdefgh")), min_size=6, max_size=40))
def test_identical_documents_always_candidates(tokens):
    hasher = MinHasher(128, seed=1)
    sig = hasher.signature(shingles(tokens, 5))
    idx = LSHIndex(128, 16)
    idx.insert("x", sig)
    idx.insert("y", sig.copy())
    assert ("x", "y") in idx.candidate_pairs() or ("y", "x") in idx.candidate_pairs()
