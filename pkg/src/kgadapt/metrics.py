"""Evaluation metrics: per-class F1 with macro/micro aggregates, and
rank-based AUC with half credit for ties.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def f1_score(predictions, golds, labels) -> dict:
    """Confusion-matrix F1. Zero-support classes get F1 = 0 by convention.

    Returns {"per_class": {label: {precision, recall, f1}}, "macro": ...,
    "micro": ...}. Macro is the unweighted mean over all classes in
    ``labels`` (the UNKNOWN class included like any other).
    """
    if len(predictions) == 0:
        raise ValueError("empty prediction list")
    if len(predictions) != len(golds):
        raise ValueError("predictions and golds must have equal length")
    index = {label: i for i, label in enumerate(labels)}
    for value in list(predictions) + list(golds):
        if value not in index:
            raise ValueError(f"label {value!r} not in class map")

    k = len(labels)
    confusion = np.zeros((k, k), dtype=np.int64)
    for pred, gold in zip(predictions, golds):
        confusion[index[gold], index[pred]] += 1

    per_class = {}
    f1s = []
    for label, i in index.items():
        tp = confusion[i, i]
        fp = confusion[:, i].sum() - tp
        fn = confusion[i, :].sum() - tp
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall > 0 else 0.0)
        per_class[label] = {
            "precision": float(precision),
            "recall": float(recall),
            "f1": float(f1),
        }
        f1s.append(f1)
    total = confusion.sum()
    correct = np.trace(confusion)
    micro = float(correct / total)  # single-label: micro F1 == accuracy
    return {
        "per_class": per_class,
        "macro": float(np.mean(f1s)),
        "micro": micro,
    }


def auc(scores, labels) -> float:
    """Probability a random positive outscores a random negative; ties
    counted as half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if len(scores) != len(labels):
        raise ValueError("scores and labels must have equal length")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both a positive and a negative example")
    ranks = rankdata(scores)  # average ranks handle ties as half credit
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))
