"""Property-based checks over randomized inputs."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from kgadapt.corpus import Sentence, tokenize
from kgadapt.matching import PhraseMatcher
from kgadapt.metrics import auc
from kgadapt.phrases import _minmax
from kgadapt.vectorize import TfidfVectorizer

from tests.test_matching import brute_force, make_lexicon

words = st.sampled_from([f"w{i}" for i in range(12)])
token_lists = st.lists(words, min_size=1, max_size=20)


@given(st.lists(st.tuples(words, words), min_size=1, max_size=8),
       token_lists)
@settings(max_examples=200, deadline=None)
def test_matcher_equals_brute_force(pairs, tokens):
    phrases = {" ".join(p) for p in pairs}
    matcher = PhraseMatcher(make_lexicon(phrases))
    s = Sentence(id=0, raw="", tokens=tuple(tokens))
    assert matcher.find_mentions(s) == brute_force(
        [tuple(p.split()) for p in phrases], tokens)


@given(token_lists)
@settings(max_examples=100, deadline=None)
def test_matcher_mentions_never_overlap(tokens):
    matcher = PhraseMatcher(make_lexicon({"w0 w1", "w1 w2", "w2", "w3 w4 w5"}))
    s = Sentence(id=0, raw="", tokens=tuple(tokens))
    mentions = matcher.find_mentions(s)
    for a, b in zip(mentions, mentions[1:]):
        assert a.end <= b.start


@given(st.dictionaries(st.integers(0, 50),
                       st.floats(-100, 100, allow_nan=False),
                       min_size=1, max_size=20))
def test_minmax_range_and_order(values):
    keyed = {(f"k{k}",): v for k, v in values.items()}
    normed = _minmax(keyed)
    assert all(0.0 <= v <= 1.0 for v in normed.values())
    ks = list(keyed)
    for a in ks:
        for b in ks:
            if keyed[a] < keyed[b]:
                assert normed[a] <= normed[b]


@given(st.lists(token_lists, min_size=1, max_size=10))
@settings(max_examples=50, deadline=None)
def test_tfidf_rows_unit_or_zero(docs):
    vec = TfidfVectorizer().fit(docs)
    X = vec.transform(docs).toarray()
    norms = np.linalg.norm(X, axis=1)
    assert np.all((np.abs(norms - 1.0) < 1e-9) | (norms == 0.0))


@given(st.lists(st.tuples(st.floats(0, 1, allow_nan=False),
                          st.integers(0, 1)),
                min_size=4, max_size=40))
@settings(max_examples=100)
def test_auc_bounds_and_complement(pairs):
    scores = [s for s, _ in pairs]
    labels = [l for _, l in pairs]
    if len(set(labels)) < 2:
        labels[0] = 1 - labels[0]
    value = auc(scores, labels)
    assert 0.0 <= value <= 1.0
    flipped = auc(scores, [1 - l for l in labels])
    assert abs(value + flipped - 1.0) < 1e-12


@given(st.text(max_size=80))
def test_tokenize_total_and_lowercase(text):
    tokens = tokenize(text)
    for tok in tokens:
        assert tok == tok.lower()
        assert " " not in tok
