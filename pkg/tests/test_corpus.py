import json

import pytest

from kgadapt.corpus import (Corpus, CorpusFormatError, MAX_SENTENCE_TOKENS,
                            Sentence, is_punct, load_corpus,
                            load_saved_corpus, sample_subset, save_corpus,
                            tokenize)


def test_tokenize_lowercases_and_splits_punctuation():
    assert tokenize("Hello, World!") == ["hello", ",", "world", "!"]
    assert tokenize("don't") == ["don", "'", "t"]
    assert tokenize("") == []
    assert tokenize("  a   b ") == ["a", "b"]


def test_is_punct():
    assert is_punct(",")
    assert is_punct("!")
    assert not is_punct("word")
    assert not is_punct("x1")


def test_sentence_truncation(caplog):
    raw = " ".join(["tok"] * (MAX_SENTENCE_TOKENS + 10))
    with caplog.at_level("WARNING"):
        s = Sentence.from_raw(0, raw)
    assert len(s.tokens) == MAX_SENTENCE_TOKENS
    assert "truncating" in caplog.text


def test_load_plain_lines(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("First line.\nSecond line.\n")
    corpus = load_corpus(p)
    assert len(corpus) == 2
    assert corpus[0].id == 0 and corpus[1].id == 1
    assert corpus[0].tokens == ("first", "line", ".")


def test_load_jsonl(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"text": "one two"}\n{"text": "three"}\n')
    corpus = load_corpus(p, format="jsonl")
    assert [s.raw for s in corpus] == ["one two", "three"]


def test_load_jsonl_reports_line_number(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"text": "ok"}\nnot json\n')
    with pytest.raises(CorpusFormatError, match=":2:"):
        load_corpus(p, format="jsonl")


def test_load_jsonl_missing_text_field(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"body": "x"}\n')
    with pytest.raises(CorpusFormatError, match="text"):
        load_corpus(p, format="jsonl")


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "absent.txt")


def test_unknown_format(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("x\n")
    with pytest.raises(ValueError, match="format"):
        load_corpus(p, format="xml")


def test_save_load_roundtrip(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("Alpha beta.\nGamma!\n")
    corpus = load_corpus(p)
    out = tmp_path / "saved.jsonl"
    save_corpus(corpus, out)
    again = load_saved_corpus(out)
    assert again.sentences == corpus.sentences


def test_sample_subset_deterministic_and_ordered():
    corpus = Corpus([Sentence.from_raw(i, f"tok{i}") for i in range(100)])
    a = sample_subset(corpus, 10, seed=7)
    b = sample_subset(corpus, 10, seed=7)
    assert [s.id for s in a] == [s.id for s in b]
    assert [s.id for s in a] == sorted(s.id for s in a)
    c = sample_subset(corpus, 10, seed=8)
    assert [s.id for s in a] != [s.id for s in c]


def test_sample_subset_too_large():
    corpus = Corpus([Sentence.from_raw(0, "x")])
    with pytest.raises(ValueError):
        sample_subset(corpus, 2, seed=0)
