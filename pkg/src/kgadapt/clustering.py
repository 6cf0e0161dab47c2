"""K-means over tf-idf vectors, representative reporting, and ingestion of
the operator-provided cluster-name file that defines the relation set.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from .corpus import Corpus


def _dense(X) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X.todense(), dtype=np.float64)
    return np.asarray(X, dtype=np.float64)


def _sq_dists(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (n_points, n_centroids)."""
    d = (np.einsum("ij,ij->i", X, X)[:, None]
         + np.einsum("ij,ij->i", centroids, centroids)[None, :]
         - 2.0 * X @ centroids.T)
    return np.maximum(d, 0.0)


class KMeans(BaseEstimator):
    """Lloyd iterations with k-means++ seeding, deterministic per seed.

    Empty clusters are re-seeded to the point currently farthest from its
    assigned centroid. The objective history is recorded and must be
    non-increasing.
    """

    def __init__(self, n_clusters: int = 8, seed: int = 0,
                 max_iter: int = 100, tol: float = 1e-6):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol

    def _init_centroids(self, X: np.ndarray, rng) -> np.ndarray:
        n = X.shape[0]
        centroids = np.empty((self.n_clusters, X.shape[1]))
        first = rng.integers(n)
        centroids[0] = X[first]
        closest = np.einsum("ij,ij->i", X - centroids[0], X - centroids[0])
        for k in range(1, self.n_clusters):
            total = closest.sum()
            if total <= 0:
                idx = rng.integers(n)
            else:
                idx = rng.choice(n, p=closest / total)
            centroids[k] = X[idx]
            d = np.einsum("ij,ij->i", X - centroids[k], X - centroids[k])
            closest = np.minimum(closest, d)
        return centroids

    def fit(self, X, y=None) -> "KMeans":
        X = _dense(X)
        n = X.shape[0]
        if self.n_clusters > n:
            raise ValueError(
                f"n_clusters={self.n_clusters} exceeds {n} points")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        rng = np.random.default_rng(self.seed)
        centroids = self._init_centroids(X, rng)
        history = []
        labels = None
        for it in range(self.max_iter):
            d = _sq_dists(X, centroids)
            labels = d.argmin(axis=1)
            # Re-seed empty clusters to the point farthest from its centroid.
            for k in range(self.n_clusters):
                if not np.any(labels == k):
                    assigned = d[np.arange(n), labels]
                    far = int(assigned.argmax())
                    centroids[k] = X[far]
                    labels[far] = k
            objective = float(
                ((X - centroids[labels]) ** 2).sum())
            if history:
                assert objective <= history[-1] + 1e-9, \
                    "k-means objective increased"
            history.append(objective)
            new_centroids = centroids.copy()
            for k in range(self.n_clusters):
                members = labels == k
                if members.any():
                    new_centroids[k] = X[members].mean(axis=0)
            shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum()))
            centroids = new_centroids
            if shift < self.tol:
                break
        # Final assignment against the converged centroids.
        d = _sq_dists(X, centroids)
        labels = d.argmin(axis=1)
        objective = float(((X - centroids[labels]) ** 2).sum())
        if history:
            assert objective <= history[-1] + 1e-9
        history.append(objective)
        self.cluster_centers_ = centroids
        self.labels_ = labels
        self.inertia_ = objective
        self.objective_history_ = history
        self.n_iter_ = it + 1
        return self

    def predict(self, X) -> np.ndarray:
        return _sq_dists(_dense(X), self.cluster_centers_).argmin(axis=1)


@dataclass
class ClusterRepresentatives:
    """Per-cluster report rows, clusters ordered by size descending."""
    rows: list[dict] = field(default_factory=list)


def cluster_representatives(kmeans: KMeans, corpus_sample: Corpus, X,
                            top_n: int = 5) -> ClusterRepresentatives:
    """Top ``top_n`` sentences nearest each centroid, ties by sentence id."""
    X = _dense(X)
    labels = kmeans.labels_
    d = _sq_dists(X, kmeans.cluster_centers_)
    sizes = np.bincount(labels, minlength=kmeans.n_clusters)
    order = sorted(range(kmeans.n_clusters), key=lambda k: (-sizes[k], k))
    rows = []
    sentences = corpus_sample.sentences
    for k in order:
        members = [i for i in range(len(sentences)) if labels[i] == k]
        members.sort(key=lambda i: (d[i, k], sentences[i].id))
        for rank, i in enumerate(members[:top_n]):
            rows.append({
                "cluster": k,
                "size": int(sizes[k]),
                "rank": rank,
                "sentence_id": sentences[i].id,
                "text": sentences[i].raw,
            })
    return ClusterRepresentatives(rows=rows)


def save_representatives_tsv(report: ClusterRepresentatives, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(["cluster", "size", "rank", "sentence_id", "text"])
        for row in report.rows:
            writer.writerow([row["cluster"], row["size"], row["rank"],
                             row["sentence_id"], row["text"]])


class LabelFileError(ValueError):
    """Malformed label file; message names the offending line."""


def load_label_file(path, n_clusters: int) -> dict[int, str]:
    """TSV {cluster, relation_name}; unmapped clusters are simply absent."""
    mapping: dict[int, str] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise LabelFileError(
                    f"{path}:{lineno}: expected 2 tab-separated fields")
            cluster_str, name = parts
            if lineno == 1 and cluster_str == "cluster":
                continue
            try:
                cluster = int(cluster_str)
            except ValueError:
                raise LabelFileError(
                    f"{path}:{lineno}: cluster index is not an integer")
            if not 0 <= cluster < n_clusters:
                raise LabelFileError(
                    f"{path}:{lineno}: cluster {cluster} outside [0, {n_clusters})")
            if not name:
                raise LabelFileError(f"{path}:{lineno}: empty relation name")
            if cluster in mapping:
                raise LabelFileError(
                    f"{path}:{lineno}: duplicate entry for cluster {cluster}")
            mapping[cluster] = name
    return mapping


def apply_labels(assignments, label_map: dict[int, str],
                 corpus_sample: Corpus) -> tuple[list[tuple], list[str]]:
    """Label every sampled sentence in a named cluster; drop the rest.

    ``assignments`` is the per-sentence cluster index array (parallel to
    the sample). Returns (labeled examples as (Sentence, relation) pairs,
    sorted relation set).
    """
    if len(assignments) != len(corpus_sample):
        raise ValueError("assignments must be parallel to the sample")
    labeled = []
    for sentence, cluster in zip(corpus_sample.sentences, assignments):
        name = label_map.get(int(cluster))
        if name is not None:
            labeled.append((sentence, name))
    relations = sorted(set(label_map.values()))
    return labeled, relations
