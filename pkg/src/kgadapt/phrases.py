"""Quality phrase mining over a tokenized corpus.

Candidates are contiguous n-grams that never cross punctuation. Each
candidate gets a quality score in [0, 1] from a fixed-weight logistic over
three min-max-normalized features: minimum adjacent-split PMI, completeness
(standalone frequency relative to the best one-token extension) and log
frequency. Unigrams are scored from normalized log frequency alone.
Feature normalization always runs over the full candidate set so that
raising the frequency or quality threshold can only remove phrases.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator

from .corpus import Corpus, is_punct

NGram = tuple[str, ...]

# Small fixed stopword list; phrases made entirely of these are dropped.
STOPWORDS = frozenset("""
a an and are as at be but by for from had has have i if in into is it its me
my no not of on or our she so that the their them they this to was we what
when where which who will with you your
""".split())


@dataclass(frozen=True)
class PhraseCandidate:
    tokens: NGram
    frequency: int
    quality: float

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass
class PhraseLexicon:
    phrases: dict[NGram, PhraseCandidate] = field(default_factory=dict)
    min_frequency: int = 3
    min_quality: float = 0.5
    max_len: int = 4

    def __len__(self) -> int:
        return len(self.phrases)

    def __contains__(self, tokens: NGram) -> bool:
        return tuple(tokens) in self.phrases

    def __iter__(self):
        return iter(self.phrases.values())

    def sorted_candidates(self) -> list[PhraseCandidate]:
        """Quality descending, then phrase text ascending (stable, diff-able)."""
        return sorted(self.phrases.values(), key=lambda c: (-c.quality, c.text))


def _token_runs(tokens) -> list[list[str]]:
    """Split a token sequence into maximal punctuation-free runs."""
    runs, current = [], []
    for tok in tokens:
        if is_punct(tok):
            if current:
                runs.append(current)
            current = []
        else:
            current.append(tok)
    if current:
        runs.append(current)
    return runs


def _count_ngrams(corpus: Corpus, max_len: int) -> tuple[Counter, int]:
    counts: Counter = Counter()
    total_tokens = 0
    for sentence in corpus:
        for run in _token_runs(sentence.tokens):
            total_tokens += len(run)
            for n in range(1, max_len + 1):
                for i in range(len(run) - n + 1):
                    counts[tuple(run[i:i + n])] += 1
    return counts, total_tokens


def generate_candidates(corpus: Corpus, max_len: int) -> dict[NGram, int]:
    """Exact frequency of every punctuation-free n-gram up to ``max_len``."""
    if not 1 <= max_len <= 5:
        raise ValueError(f"max_len must be in [1, 5], got {max_len}")
    counts, _ = _count_ngrams(corpus, max_len)
    return dict(counts)


def _minmax(values: dict[NGram, float]) -> dict[NGram, float]:
    """Min-max normalize; a degenerate (constant or singleton) set maps to 1.0."""
    if not values:
        return {}
    lo, hi = min(values.values()), max(values.values())
    if hi - lo == 0:
        return {k: 1.0 for k in values}
    return {k: (v - lo) / (hi - lo) for k, v in values.items()}


def _logistic(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def score_candidates(corpus: Corpus, max_len: int) -> dict[NGram, tuple[int, float]]:
    """Score every candidate; returns ngram -> (frequency, quality).

    Extensions one token longer than ``max_len`` are counted internally so
    the completeness feature is defined for maximal-length candidates.
    """
    ext_counts, total_tokens = _count_ngrams(corpus, max_len + 1)
    counts = {g: f for g, f in ext_counts.items() if len(g) <= max_len}
    if not counts:
        return {}
    total = max(total_tokens, 1)

    log_freq = {g: math.log(f) for g, f in counts.items()}
    pmi: dict[NGram, float] = {}
    completeness: dict[NGram, float] = {}
    for gram, freq in counts.items():
        if len(gram) < 2:
            continue
        # Minimum pointwise mutual information over adjacent splits.
        p_gram = freq / total
        split_pmis = []
        for i in range(1, len(gram)):
            p_left = counts[gram[:i]] / total
            p_right = counts[gram[i:]] / total
            split_pmis.append(math.log(p_gram / (p_left * p_right)))
        pmi[gram] = min(split_pmis)
    # Standalone frequency relative to the most frequent one-token
    # extension; phrases that only ever occur inside a longer phrase get
    # the lowest possible ratio. Each (n+1)-gram extends exactly two grams.
    best_ext: dict[NGram, int] = {}
    for ext, ext_freq in ext_counts.items():
        if len(ext) < 2:
            continue
        for contained in (ext[:-1], ext[1:]):
            if ext_freq > best_ext.get(contained, 0):
                best_ext[contained] = ext_freq
    for gram, freq in counts.items():
        if len(gram) < 2:
            continue
        completeness[gram] = freq / max(best_ext.get(gram, 0), 1)

    lf_norm = _minmax(log_freq)
    pmi_norm = _minmax(pmi)
    comp_norm = _minmax({g: completeness[g] for g in pmi})

    scored = {}
    for gram, freq in counts.items():
        if len(gram) == 1:
            score = _logistic(3.0 * lf_norm[gram])
        else:
            score = _logistic(pmi_norm[gram] + comp_norm[gram] + lf_norm[gram])
        scored[gram] = (freq, score)
    return scored


def mine_phrases(
    corpus: Corpus,
    min_frequency: int = 3,
    min_quality: float = 0.5,
    max_len: int = 4,
) -> PhraseLexicon:
    """Extract the lexicon of quality phrases above both thresholds."""
    if min_frequency < 1:
        raise ValueError("min_frequency must be >= 1")
    if not 0.0 <= min_quality <= 1.0:
        raise ValueError("min_quality must be in [0, 1]")
    scored = score_candidates(corpus, max_len)
    phrases = {}
    for gram, (freq, quality) in scored.items():
        if freq < min_frequency or quality < min_quality:
            continue
        if all(tok in STOPWORDS for tok in gram):
            continue
        phrases[gram] = PhraseCandidate(tokens=gram, frequency=freq, quality=quality)
    return PhraseLexicon(
        phrases=phrases, min_frequency=min_frequency,
        min_quality=min_quality, max_len=max_len,
    )


class PhraseMiner(BaseEstimator):
    """Estimator wrapper: ``fit(corpus)`` populates ``lexicon_``."""

    def __init__(self, min_frequency: int = 3, min_quality: float = 0.5,
                 max_len: int = 4):
        self.min_frequency = min_frequency
        self.min_quality = min_quality
        self.max_len = max_len

    def fit(self, corpus: Corpus, y=None) -> "PhraseMiner":
        self.lexicon_ = mine_phrases(
            corpus, min_frequency=self.min_frequency,
            min_quality=self.min_quality, max_len=self.max_len)
        return self


def save_lexicon_tsv(lexicon: PhraseLexicon, path) -> None:
    """TSV columns: phrase, frequency, quality (quality desc, phrase asc)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("phrase\tfrequency\tquality\n")
        for cand in lexicon.sorted_candidates():
            fh.write(f"{cand.text}\t{cand.frequency}\t{cand.quality:.10f}\n")


def load_lexicon_tsv(path, min_frequency: int = 3, min_quality: float = 0.5,
                     max_len: int = 4) -> PhraseLexicon:
    phrases = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        for line in fh:
            text, freq, quality = line.rstrip("\n").split("\t")
            gram = tuple(text.split(" "))
            phrases[gram] = PhraseCandidate(
                tokens=gram, frequency=int(freq), quality=float(quality))
    return PhraseLexicon(phrases=phrases, min_frequency=min_frequency,
                         min_quality=min_quality, max_len=max_len)
