"""Dictionary matching of lexicon phrases against tokenized sentences.

The matcher is a token-level trie scanned left to right with the
leftmost-longest rule: at each position take the longest lexicon phrase
starting there and skip past it, so mentions never overlap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .corpus import Corpus, Sentence
from .phrases import PhraseLexicon

_TERMINAL = "$"


@dataclass(frozen=True)
class Mention:
    start: int
    end: int
    phrase: str


@dataclass
class AnnotatedSentence:
    sentence: Sentence
    mentions: list[Mention] = field(default_factory=list)
    relation: str | None = None
    relation_confidence: float | None = None
    low_confidence: bool = False


class PhraseMatcher:
    """Immutable after construction; concurrent find_mentions calls are safe."""

    def __init__(self, lexicon: PhraseLexicon):
        root: dict = {}
        for cand in lexicon:
            node = root
            for tok in cand.tokens:
                node = node.setdefault(tok, {})
            node[_TERMINAL] = cand.text
        self._root = root
        self._max_len = max((len(c.tokens) for c in lexicon), default=0)

    def find_mentions(self, sentence: Sentence) -> list[Mention]:
        tokens = sentence.tokens
        mentions = []
        i, n = 0, len(tokens)
        while i < n:
            node = self._root
            best_end, best_phrase = -1, None
            j = i
            while j < n and tokens[j] in node:
                node = node[tokens[j]]
                j += 1
                if _TERMINAL in node:
                    best_end, best_phrase = j, node[_TERMINAL]
            if best_phrase is not None:
                mentions.append(Mention(start=i, end=best_end, phrase=best_phrase))
                i = best_end
            else:
                i += 1
        return mentions

    def annotate(self, corpus: Corpus) -> list[AnnotatedSentence]:
        return [AnnotatedSentence(sentence=s, mentions=self.find_mentions(s))
                for s in corpus]

    def to_dict(self) -> dict:
        """Canonical serialization (sorted keys) for determinism checks."""
        def canon(node: dict) -> dict:
            return {k: (v if k == _TERMINAL else canon(v))
                    for k, v in sorted(node.items())}
        return canon(self._root)


def save_annotations(annotated, path: str | Path) -> None:
    """JSONL {id, tokens, mentions, relation, confidence}."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for ann in annotated:
            record = {
                "id": ann.sentence.id,
                "tokens": list(ann.sentence.tokens),
                "mentions": [
                    {"start": m.start, "end": m.end, "phrase": m.phrase}
                    for m in ann.mentions
                ],
            }
            if ann.relation is not None:
                record["relation"] = ann.relation
                record["confidence"] = ann.relation_confidence
                record["low_confidence"] = ann.low_confidence
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def load_annotations(path: str | Path) -> list[AnnotatedSentence]:
    annotated = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            sentence = Sentence(
                id=record["id"],
                raw=" ".join(record["tokens"]),
                tokens=tuple(record["tokens"]))
            annotated.append(AnnotatedSentence(
                sentence=sentence,
                mentions=[Mention(**m) for m in record["mentions"]],
                relation=record.get("relation"),
                relation_confidence=record.get("confidence"),
                low_confidence=record.get("low_confidence", False)))
    return annotated
