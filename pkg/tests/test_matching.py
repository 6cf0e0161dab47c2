import numpy as np

from kgadapt.corpus import Corpus, Sentence
from kgadapt.matching import (Mention, PhraseMatcher, load_annotations,
                              save_annotations)
from kgadapt.phrases import PhraseCandidate, PhraseLexicon


def make_lexicon(phrases):
    cands = {
        tuple(p.split()): PhraseCandidate(tokens=tuple(p.split()),
                                          frequency=1, quality=1.0)
        for p in phrases
    }
    return PhraseLexicon(phrases=cands)


def brute_force(lexicon_tokens, tokens):
    """Reference leftmost-longest scanner over an explicit phrase set."""
    phrases = set(lexicon_tokens)
    out = []
    i = 0
    while i < len(tokens):
        best = None
        for j in range(len(tokens), i, -1):
            if tuple(tokens[i:j]) in phrases:
                best = j
                break
        if best is not None:
            out.append(Mention(start=i, end=best,
                               phrase=" ".join(tokens[i:best])))
            i = best
        else:
            i += 1
    return out


def test_leftmost_longest_preference():
    matcher = PhraseMatcher(make_lexicon(["new york", "new york city", "city"]))
    s = Sentence.from_raw(0, "visit new york city today")
    assert matcher.find_mentions(s) == [
        Mention(start=1, end=4, phrase="new york city")]


def test_non_overlapping():
    matcher = PhraseMatcher(make_lexicon(["a b", "b c"]))
    s = Sentence.from_raw(0, "a b c")
    assert matcher.find_mentions(s) == [Mention(start=0, end=2, phrase="a b")]


def test_no_match():
    matcher = PhraseMatcher(make_lexicon(["x y"]))
    s = Sentence.from_raw(0, "a b c")
    assert matcher.find_mentions(s) == []


def test_adjacent_matches():
    matcher = PhraseMatcher(make_lexicon(["a b", "c d"]))
    s = Sentence.from_raw(0, "a b c d")
    assert matcher.find_mentions(s) == [
        Mention(0, 2, "a b"), Mention(2, 4, "c d")]


def test_matches_brute_force_on_random_inputs():
    rng = np.random.default_rng(0)
    vocab = [f"w{i}" for i in range(30)]
    for _ in range(50):
        phrases = set()
        for _ in range(rng.integers(3, 12)):
            n = int(rng.integers(1, 4))
            phrases.add(" ".join(
                vocab[int(i)] for i in rng.integers(0, len(vocab), size=n)))
        matcher = PhraseMatcher(make_lexicon(phrases))
        tokens = [vocab[int(i)] for i in rng.integers(0, len(vocab), size=25)]
        s = Sentence(id=0, raw=" ".join(tokens), tokens=tuple(tokens))
        assert matcher.find_mentions(s) == brute_force(
            [tuple(p.split()) for p in phrases], tokens)


def test_annotate_and_serialization_roundtrip(tmp_path):
    matcher = PhraseMatcher(make_lexicon(["red fox", "dog"]))
    corpus = Corpus([Sentence.from_raw(0, "the red fox met a dog"),
                     Sentence.from_raw(1, "nothing here")])
    annotated = matcher.annotate(corpus)
    assert [m.phrase for m in annotated[0].mentions] == ["red fox", "dog"]
    assert annotated[1].mentions == []
    path = tmp_path / "ann.jsonl"
    save_annotations(annotated, path)
    again = load_annotations(path)
    assert [a.mentions for a in again] == [a.mentions for a in annotated]
    assert [a.sentence.tokens for a in again] == [
        a.sentence.tokens for a in annotated]


def test_trie_serialization_is_canonical():
    a = PhraseMatcher(make_lexicon(["b c", "a"]))
    b = PhraseMatcher(make_lexicon(["a", "b c"]))
    assert a.to_dict() == b.to_dict()
