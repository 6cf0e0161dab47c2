"""Tf-idf vectorization with a fully pinned weighting scheme.

weight(t, d) = tf(t, d) * idf(t) with raw term counts and
idf(t) = ln((1 + N) / (1 + df(t))) + 1. Document vectors are
L2-normalized on transform; all-zero vectors are left untouched.
"""

from __future__ import annotations

import math
from collections import Counter

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import Corpus


def _as_token_lists(docs) -> list[list[str]]:
    if isinstance(docs, Corpus):
        return [list(s.tokens) for s in docs]
    return [list(d) for d in docs]


class TfidfVectorizer(BaseEstimator, TransformerMixin):
    """fit() learns vocabulary and idf; transform() emits CSR row vectors."""

    def fit(self, docs, y=None) -> "TfidfVectorizer":
        token_lists = _as_token_lists(docs)
        if not token_lists:
            raise ValueError("cannot fit tf-idf on an empty corpus")
        df: Counter = Counter()
        for tokens in token_lists:
            df.update(set(tokens))
        self.vocabulary_ = {tok: i for i, tok in enumerate(sorted(df))}
        n_docs = len(token_lists)
        idf = np.zeros(len(self.vocabulary_), dtype=np.float64)
        for tok, i in self.vocabulary_.items():
            idf[i] = math.log((1 + n_docs) / (1 + df[tok])) + 1.0
        self.idf_ = idf
        return self

    def transform(self, docs) -> sp.csr_matrix:
        token_lists = _as_token_lists(docs)
        vocab = self.vocabulary_
        indptr, indices, data = [0], [], []
        for tokens in token_lists:
            counts = Counter(tok for tok in tokens if tok in vocab)
            row = sorted((vocab[tok], tf) for tok, tf in counts.items())
            for col, tf in row:
                indices.append(col)
                data.append(tf * self.idf_[col])
            indptr.append(len(indices))
        X = sp.csr_matrix(
            (np.asarray(data, dtype=np.float64),
             np.asarray(indices, dtype=np.int64),
             np.asarray(indptr, dtype=np.int64)),
            shape=(len(token_lists), len(vocab)))
        # L2 normalization, skipping zero rows.
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
        scale = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 0.0)
        # keep zero rows as exact zeros but do not divide them
        scale[norms == 0] = 1.0
        X = sp.diags(scale) @ X
        return sp.csr_matrix(X)
