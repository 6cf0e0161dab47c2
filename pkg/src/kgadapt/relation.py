"""Relation classifier over tf-idf features, and corpus-wide annotation.

Multinomial logistic regression trained by full-batch gradient descent with
an L2 penalty. Zero initialization keeps the untrained model exactly
uniform; the sorted label order is fixed at train time and breaks argmax
ties deterministically.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from .corpus import Corpus, Sentence
from .matching import AnnotatedSentence, PhraseMatcher
from .vectorize import TfidfVectorizer


def _softmax_rows(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def loss_and_grad(W: np.ndarray, b: np.ndarray, X, Y: np.ndarray,
                  l2: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus 0.5 * l2 * ||W||^2, with its exact gradient."""
    n = Y.shape[0]
    P = _softmax_rows(np.asarray(X @ W.T) + b)
    loss = (-np.sum(Y * np.log(np.maximum(P, 1e-300))) / n
            + 0.5 * l2 * float((W ** 2).sum()))
    G = (P - Y) / n
    grad_W = np.asarray(G.T @ X) + l2 * W
    grad_b = G.sum(axis=0)
    return float(loss), grad_W, grad_b


class RelationClassifier(BaseEstimator):

    def __init__(self, epochs: int = 200, lr: float = 1.0, l2: float = 1e-4,
                 seed: int = 0):
        self.epochs = epochs
        self.lr = lr
        self.l2 = l2
        self.seed = seed

    def fit(self, docs, labels) -> "RelationClassifier":
        """``docs`` is a list of token sequences (or Sentences); ``labels``
        the parallel relation names."""
        docs = [list(d.tokens) if isinstance(d, Sentence) else list(d)
                for d in docs]
        if len(docs) != len(labels):
            raise ValueError("docs and labels must have equal length")
        self.labels_ = sorted(set(labels))
        if len(self.labels_) < 2:
            raise ValueError("need at least 2 distinct labels")
        label_index = {name: i for i, name in enumerate(self.labels_)}

        self.tfidf_ = TfidfVectorizer().fit(docs)
        X = self.tfidf_.transform(docs)
        n, v = X.shape
        k = len(self.labels_)
        Y = np.zeros((n, k))
        for i, name in enumerate(labels):
            Y[i, label_index[name]] = 1.0

        W = np.zeros((k, v))
        b = np.zeros(k)
        history = []
        for _ in range(self.epochs):
            loss, grad_W, grad_b = loss_and_grad(W, b, X, Y, self.l2)
            history.append(loss)
            W -= self.lr * grad_W
            b -= self.lr * grad_b
        self.weights_ = W
        self.bias_ = b
        self.loss_history_ = history
        return self

    def predict_proba(self, docs) -> np.ndarray:
        docs = [list(d.tokens) if isinstance(d, Sentence) else list(d)
                for d in docs]
        X = self.tfidf_.transform(docs)
        return _softmax_rows(np.asarray(X @ self.weights_.T) + self.bias_)

    def predict(self, docs) -> list[tuple[str, float]]:
        """(relation, confidence) per document; ties broken by label order."""
        P = self.predict_proba(docs)
        out = []
        for row in P:
            idx = int(row.argmax())  # argmax returns the first maximum
            out.append((self.labels_[idx], float(row[idx])))
        return out


def annotate_corpus(classifier: RelationClassifier, matcher: PhraseMatcher,
                    corpus: Corpus, confidence_floor: float = 0.0):
    """Yield every sentence with mentions and a predicted relation.

    Low-confidence sentences are flagged, never dropped.
    """
    for sentence in corpus:
        relation, confidence = classifier.predict([sentence])[0]
        yield AnnotatedSentence(
            sentence=sentence,
            mentions=matcher.find_mentions(sentence),
            relation=relation,
            relation_confidence=confidence,
            low_confidence=confidence < confidence_floor,
        )
