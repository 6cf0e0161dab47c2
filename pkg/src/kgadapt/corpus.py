"""Corpus loading, tokenization and sampling.

Sentence ids are assigned by file order and stay stable through every
downstream stage, so all later artifacts can join on them.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

MAX_SENTENCE_TOKENS = 256

# A token is either a run of word characters or a single punctuation char.
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(raw: str) -> list[str]:
    """Lowercase, split on whitespace, detach punctuation as single tokens."""
    return _TOKEN_RE.findall(raw.lower())


def is_punct(token: str) -> bool:
    return not _TOKEN_RE.match(token) or not (token[0].isalnum() or token[0] == "_")


@dataclass(frozen=True)
class Sentence:
    id: int
    raw: str
    tokens: tuple[str, ...]

    @classmethod
    def from_raw(cls, sid: int, raw: str) -> "Sentence":
        tokens = tokenize(raw)
        if len(tokens) > MAX_SENTENCE_TOKENS:
            logger.warning(
                "sentence %d has %d tokens, truncating to %d",
                sid, len(tokens), MAX_SENTENCE_TOKENS,
            )
            tokens = tokens[:MAX_SENTENCE_TOKENS]
        return cls(id=sid, raw=raw, tokens=tuple(tokens))


@dataclass
class Corpus:
    sentences: list[Sentence] = field(default_factory=list)
    source_path: str = ""

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def __getitem__(self, i: int) -> Sentence:
        return self.sentences[i]


class CorpusFormatError(ValueError):
    """Raised for malformed corpus records; carries the offending line number."""


def load_corpus(path: str | Path, format: str = "plain-lines") -> Corpus:
    """Load a corpus from disk, one sentence per record, sequential ids.

    ``format`` is ``plain-lines`` (one sentence per line) or ``jsonl``
    (objects with a ``text`` field).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    if format not in ("plain-lines", "jsonl"):
        raise ValueError(f"unknown corpus format: {format!r}")

    sentences = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if format == "plain-lines":
                text = line
            else:
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusFormatError(
                        f"{path}:{lineno}: invalid JSON: {exc}") from exc
                if not isinstance(record, dict) or "text" not in record:
                    raise CorpusFormatError(
                        f"{path}:{lineno}: record missing 'text' field")
                text = record["text"]
            sentences.append(Sentence.from_raw(len(sentences), text))
    return Corpus(sentences=sentences, source_path=str(path))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write JSONL records {id, text, tokens}."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for s in corpus:
            fh.write(json.dumps(
                {"id": s.id, "text": s.raw, "tokens": list(s.tokens)},
                ensure_ascii=False, sort_keys=True) + "\n")


def load_saved_corpus(path: str | Path) -> Corpus:
    """Load a corpus previously written by :func:`save_corpus`."""
    path = Path(path)
    sentences = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            record = json.loads(line)
            sentences.append(Sentence(
                id=record["id"], raw=record["text"],
                tokens=tuple(record["tokens"])))
    return Corpus(sentences=sentences, source_path=str(path))


def sample_subset(corpus: Corpus, count: int, seed: int) -> Corpus:
    """Uniform sample without replacement; original ids preserved."""
    m = len(corpus)
    if count > m:
        raise ValueError(f"cannot sample {count} sentences from corpus of {m}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(m, size=count, replace=False))
    return Corpus(
        sentences=[corpus.sentences[i] for i in idx],
        source_path=corpus.source_path,
    )
