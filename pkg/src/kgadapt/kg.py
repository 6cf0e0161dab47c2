"""Knowledge graph of n-ary relational facts with supporting sentences.

A fact key is (relation, deduplicated ordered entity phrases); sentences
sharing a key merge into one fact. Zero-entity sentences are stored too,
since the model's [PLC] placeholder gives them a well-defined pathway.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .matching import AnnotatedSentence


@dataclass
class KnowledgeFact:
    relation: str
    entities: tuple[str, ...]
    sentence_ids: list[int] = field(default_factory=list)

    @property
    def arity(self) -> int:
        return len(self.entities)


@dataclass
class KnowledgeGraph:
    facts: list[KnowledgeFact] = field(default_factory=list)
    provenance: str = ""

    @property
    def entities(self) -> set[str]:
        return {e for f in self.facts for e in f.entities}

    @property
    def relations(self) -> set[str]:
        return {f.relation for f in self.facts}


def _fact_key(ann: AnnotatedSentence) -> tuple[str, tuple[str, ...]]:
    seen, entities = set(), []
    for mention in ann.mentions:
        if mention.phrase not in seen:
            seen.add(mention.phrase)
            entities.append(mention.phrase)
    return ann.relation, tuple(entities)


def build_kg(annotated, provenance: str = "") -> KnowledgeGraph:
    """Fold an annotated stream into merged facts; deterministic."""
    by_key: dict[tuple, list[int]] = {}
    for ann in annotated:
        if ann.relation is None:
            raise ValueError(
                f"sentence {ann.sentence.id} has no relation annotation")
        key = _fact_key(ann)
        by_key.setdefault(key, []).append(ann.sentence.id)
    facts = []
    for (relation, entities) in sorted(by_key):
        ids = sorted(set(by_key[(relation, entities)]))
        facts.append(KnowledgeFact(
            relation=relation, entities=entities, sentence_ids=ids))
    return KnowledgeGraph(facts=facts, provenance=provenance)


def kg_stats(kg: KnowledgeGraph) -> dict[str, int]:
    """Counts in Table-style order: entities, relations, tuples, sentences."""
    sentence_ids = {sid for f in kg.facts for sid in f.sentence_ids}
    stats = {
        "entity_count": len(kg.entities),
        "relation_count": len(kg.relations),
        "tuple_count": len(kg.facts),
        "sentence_count": len(sentence_ids),
    }
    assert stats["sentence_count"] >= stats["tuple_count"], \
        "every tuple must have at least one distinct supporting sentence"
    return stats


@dataclass(frozen=True)
class TrainingExample:
    """Relation-extraction pretraining example."""
    tokens: tuple[str, ...]
    entity_starts: tuple[int, ...]
    relation: str
    sentence_id: int


def export_training_set(kg: KnowledgeGraph, annotated_by_id: dict,
                        mode: str = "nary") -> list[TrainingExample]:
    """One example per (sentence, fact) pair passing the arity filter.

    ``binary-only`` keeps facts with exactly two entities; ``nary`` keeps
    every fact including zero-entity ones.
    """
    if mode not in ("binary-only", "nary"):
        raise ValueError(f"unknown export mode: {mode!r}")
    examples = []
    for fact in kg.facts:
        if mode == "binary-only" and fact.arity != 2:
            continue
        for sid in fact.sentence_ids:
            ann = annotated_by_id[sid]
            examples.append(TrainingExample(
                tokens=tuple(ann.sentence.tokens),
                entity_starts=tuple(m.start for m in ann.mentions),
                relation=fact.relation,
                sentence_id=sid))
    return examples


def save_kg(kg: KnowledgeGraph, path: str | Path) -> None:
    """Header record with stats, then facts in canonical sorted order."""
    stats = kg_stats(kg)
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "entities": stats["entity_count"],
            "relations": stats["relation_count"],
            "tuples": stats["tuple_count"],
            "sentences": stats["sentence_count"],
            "provenance": kg.provenance,
        }, ensure_ascii=False, sort_keys=True) + "\n")
        for fact in sorted(kg.facts, key=lambda f: (f.relation, f.entities)):
            fh.write(json.dumps({
                "relation": fact.relation,
                "entities": list(fact.entities),
                "sentence_ids": fact.sentence_ids,
            }, ensure_ascii=False, sort_keys=True) + "\n")


def load_kg(path: str | Path) -> KnowledgeGraph:
    with Path(path).open(encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        facts = []
        for line in fh:
            record = json.loads(line)
            facts.append(KnowledgeFact(
                relation=record["relation"],
                entities=tuple(record["entities"]),
                sentence_ids=list(record["sentence_ids"])))
    return KnowledgeGraph(facts=facts, provenance=header.get("provenance", ""))
