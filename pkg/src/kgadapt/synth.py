"""Synthetic domain generator with full ground truth.

Each relation owns a set of multiword phrases built from words unique to
that phrase, so dictionary matching over the planted lexicon is exact.
Sentences render a sampled tuple (arity 1-3) with noise tokens inserted
between phrases; pure-noise sentences carry the UNKNOWN label. The
generator emits the corpus, the golden facts, classification and matching
datasets and an unlabeled pool, all reproducible per seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, Sentence

UNKNOWN = "UNKNOWN"

_CONSONANTS = "bcdfgklmnprstvz"
_VOWELS = "aeiou"


@dataclass
class SynthSpec:
    num_relations: int = 5
    phrases_per_relation: int = 4
    sentences: int = 2000
    noise_rate: float = 0.2
    unknown_rate: float = 0.1
    tuples_per_relation: int = 4
    noise_vocab_size: int = 120
    train_size: int = 60
    test_size: int = 300
    matching_pairs: int = 200
    unlabeled_size: int = 200

    def __post_init__(self):
        if self.num_relations < 2:
            raise ValueError("need at least 2 relations")
        if self.phrases_per_relation < 3:
            raise ValueError("need at least 3 phrases per relation (max arity)")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must be in [0, 1]")
        if not 0.0 <= self.unknown_rate < 1.0:
            raise ValueError("unknown_rate must be in [0, 1)")


@dataclass
class ClassificationDataset:
    train: list[tuple[tuple[str, ...], str]]
    test: list[tuple[tuple[str, ...], str]]
    classes: list[str]  # includes UNKNOWN


@dataclass
class MatchingDataset:
    train: list[tuple[tuple[str, ...], tuple[str, ...], int]]
    test: list[tuple[tuple[str, ...], tuple[str, ...], int]]


@dataclass
class GoldenFact:
    relation: str
    entities: tuple[str, ...]
    sentence_ids: list[int] = field(default_factory=list)


@dataclass
class SyntheticDomain:
    corpus: Corpus
    relations: list[str]
    planted_phrases: list[tuple[str, ...]]
    golden_relations: dict[int, str]
    golden_entities: dict[int, tuple[str, ...]]
    golden_facts: list[GoldenFact]
    classification: ClassificationDataset
    matching: MatchingDataset
    unlabeled: list[tuple[str, ...]]
    spec: SynthSpec


def _word_pool(rng, count: int) -> list[str]:
    syllables = [c + v for c in _CONSONANTS for v in _VOWELS]
    pool: list[str] = []
    seen = set()
    while len(pool) < count:
        n_syll = int(rng.integers(2, 4))
        word = "".join(syllables[int(rng.integers(len(syllables)))]
                       for _ in range(n_syll))
        if word not in seen:
            seen.add(word)
            pool.append(word)
    return pool


class _Domain:
    """Sampled relation/phrase/tuple structure plus sentence rendering."""

    def __init__(self, spec: SynthSpec, rng):
        self.spec = spec
        self.relations = [f"relation_{i}" for i in range(spec.num_relations)]
        n_phrase_words = spec.num_relations * spec.phrases_per_relation * 3
        pool = _word_pool(rng, n_phrase_words + spec.noise_vocab_size)
        self.noise_vocab = pool[:spec.noise_vocab_size]
        phrase_words = pool[spec.noise_vocab_size:]
        self.phrases_by_relation: list[list[tuple[str, ...]]] = []
        cursor = 0
        for _ in range(spec.num_relations):
            phrases = []
            for _ in range(spec.phrases_per_relation):
                length = int(rng.integers(2, 4))
                phrases.append(tuple(phrase_words[cursor:cursor + length]))
                cursor += length
            self.phrases_by_relation.append(phrases)
        # Tuples: ordered phrase subsets of arity 1..3 per relation.
        self.tuples_by_relation: list[list[tuple[tuple[str, ...], ...]]] = []
        for r in range(spec.num_relations):
            tuples = []
            seen = set()
            while len(tuples) < spec.tuples_per_relation:
                arity = int(rng.integers(1, 4))
                idx = rng.choice(spec.phrases_per_relation, size=arity,
                                 replace=False)
                tup = tuple(self.phrases_by_relation[r][i] for i in idx)
                if tup not in seen:
                    seen.add(tup)
                    tuples.append(tup)
            self.tuples_by_relation.append(tuples)

    def noise_tokens(self, rng, count: int) -> list[str]:
        return [self.noise_vocab[int(rng.integers(len(self.noise_vocab)))]
                for _ in range(count)]

    def render(self, rng, relation_idx: int, tuple_idx: int) -> list[str]:
        """Tuple phrases in order with noise inserted between them."""
        tup = self.tuples_by_relation[relation_idx][tuple_idx]
        tokens: list[str] = []
        for phrase in tup:
            tokens += self.noise_tokens(
                rng, int(rng.binomial(5, self.spec.noise_rate)))
            tokens += list(phrase)
        tokens += self.noise_tokens(
            rng, int(rng.binomial(5, self.spec.noise_rate)))
        return tokens

    def render_unknown(self, rng) -> list[str]:
        return self.noise_tokens(rng, int(rng.integers(4, 9)))

    def sample_labeled(self, rng, unknown_rate: float | None = None):
        """One labeled sentence: (tokens, relation name, entity texts)."""
        if unknown_rate is None:
            unknown_rate = self.spec.unknown_rate
        if rng.random() < unknown_rate:
            return self.render_unknown(rng), UNKNOWN, ()
        r = int(rng.integers(self.spec.num_relations))
        t = int(rng.integers(self.spec.tuples_per_relation))
        tokens = self.render(rng, r, t)
        entities = tuple(" ".join(p) for p in self.tuples_by_relation[r][t])
        return tokens, self.relations[r], entities


def generate_synthetic_domain(seed: int, spec: SynthSpec) -> SyntheticDomain:
    rng = np.random.default_rng(seed)
    domain = _Domain(spec, rng)

    sentences, golden_relations, golden_entities = [], {}, {}
    facts: dict[tuple[str, tuple[str, ...]], list[int]] = {}
    for sid in range(spec.sentences):
        tokens, relation, entities = domain.sample_labeled(rng)
        sentences.append(Sentence.from_raw(sid, " ".join(tokens)))
        golden_relations[sid] = relation
        golden_entities[sid] = entities
        if relation != UNKNOWN:
            facts.setdefault((relation, entities), []).append(sid)
    corpus = Corpus(sentences=sentences, source_path=f"synthetic:{seed}")
    golden_facts = [
        GoldenFact(relation=r, entities=e, sentence_ids=ids)
        for (r, e), ids in sorted(facts.items())
    ]

    def labeled_set(count: int) -> list[tuple[tuple[str, ...], str]]:
        return [
            (tuple(tokens), relation)
            for tokens, relation, _ in
            (domain.sample_labeled(rng) for _ in range(count))
        ]

    classification = ClassificationDataset(
        train=labeled_set(spec.train_size),
        test=labeled_set(spec.test_size),
        classes=sorted(domain.relations) + [UNKNOWN],
    )

    def matching_set(count: int):
        pairs = []
        for i in range(count):
            if i % 2 == 0:  # positive: two renderings of the same tuple
                r = int(rng.integers(spec.num_relations))
                t = int(rng.integers(spec.tuples_per_relation))
                q1 = tuple(domain.render(rng, r, t))
                q2 = tuple(domain.render(rng, r, t))
                pairs.append((q1, q2, 1))
            else:  # negative: different relations
                r1 = int(rng.integers(spec.num_relations))
                r2 = int((r1 + 1 + rng.integers(spec.num_relations - 1))
                         % spec.num_relations)
                t1 = int(rng.integers(spec.tuples_per_relation))
                t2 = int(rng.integers(spec.tuples_per_relation))
                q1 = tuple(domain.render(rng, r1, t1))
                q2 = tuple(domain.render(rng, r2, t2))
                pairs.append((q1, q2, 0))
        return pairs

    matching = MatchingDataset(
        train=matching_set(spec.matching_pairs),
        test=matching_set(max(spec.matching_pairs // 2, 2)),
    )

    unlabeled = [tuple(domain.sample_labeled(rng)[0])
                 for _ in range(spec.unlabeled_size)]

    planted = [p for phrases in domain.phrases_by_relation for p in phrases]
    return SyntheticDomain(
        corpus=corpus,
        relations=sorted(domain.relations),
        planted_phrases=planted,
        golden_relations=golden_relations,
        golden_entities=golden_entities,
        golden_facts=golden_facts,
        classification=classification,
        matching=matching,
        unlabeled=unlabeled,
        spec=spec,
    )


def name_clusters_by_majority(labels, corpus_sample: Corpus,
                              golden_relations: dict[int, str]) -> dict[int, str]:
    """Simulated expert: name each cluster by its majority golden relation."""
    from collections import Counter
    votes: dict[int, Counter] = {}
    for sentence, cluster in zip(corpus_sample.sentences, labels):
        votes.setdefault(int(cluster), Counter())[
            golden_relations[sentence.id]] += 1
    return {cluster: counter.most_common(1)[0][0]
            for cluster, counter in votes.items()}
