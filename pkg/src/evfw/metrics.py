"""External (AR, RI, NMI) and internal (PC, CE, XB, DI) validity measures.

External measures compare crisp predicted clusters with class labels and
return fractions in [0, 1]. Internal measures use only the model.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist, pdist

from .core import as_matrix, dissimilarities, xlogx


def _pair(pred, truth):
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"length mismatch: pred {pred.shape} vs truth {truth.shape}")
    if pred.size == 0:
        raise ValueError("empty input")
    return pred, truth


def contingency(pred, truth) -> np.ndarray:
    """Counts table, rows = true classes, columns = predicted clusters.

    Ids are compacted first, so arbitrary integer labels are accepted.
    """
    pred, truth = _pair(pred, truth)
    _, t = np.unique(truth, return_inverse=True)
    _, p = np.unique(pred, return_inverse=True)
    table = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(table, (t, p), 1)
    return table


def accuracy_rate(pred, truth) -> float:
    """Fraction of points matched under the best one-to-one cluster/class assignment."""
    table = contingency(pred, truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return int(table[rows, cols].sum()) / int(table.sum())


def _comb2(x):
    x = np.asarray(x, dtype=np.int64)
    return int(np.sum(x * (x - 1) // 2))


def rand_index(pred, truth) -> float:
    """Pair agreements (same/same plus different/different) over all pairs."""
    table = contingency(pred, truth)
    n = int(table.sum())
    if n < 2:
        raise ValueError("rand index needs at least 2 points")
    total = n * (n - 1) // 2
    same_both = _comb2(table)
    same_truth = _comb2(table.sum(axis=1))
    same_pred = _comb2(table.sum(axis=0))
    agree = total + 2 * same_both - same_truth - same_pred
    return agree / total


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth) -> float:
    """Mutual information over the arithmetic mean of the two entropies."""
    table = contingency(pred, truth)
    n = table.sum()
    h_t = _entropy(table.sum(axis=1), n)
    h_p = _entropy(table.sum(axis=0), n)
    if h_t == 0 and h_p == 0:
        return 1.0
    if h_t == 0 or h_p == 0:
        return 0.0
    joint = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / n**2
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log(joint[nz] / outer[nz])))
    return min(max(mi / ((h_t + h_p) / 2), 0.0), 1.0)


def partition_coefficient(U) -> float:
    U = np.asarray(U, float)
    return float(np.sum(U**2) / U.shape[0])


def classification_entropy(U) -> float:
    U = np.asarray(U, float)
    return float(-np.sum(xlogx(U)) / U.shape[0])


def xie_beni(data, U, V) -> float:
    """Fuzzy compactness over n times the minimum squared center separation.

    Coincident centers give ``inf``.
    """
    X = as_matrix(data)
    U, V = np.asarray(U, float), np.asarray(V, float)
    if V.shape[0] < 2:
        raise ValueError("Xie-Beni needs at least 2 clusters")
    compact = float(np.sum(U**2 * dissimilarities(X, V).sum(axis=2)))
    sep = float(pdist(V, "sqeuclidean").min())
    if sep == 0:
        return math.inf
    return compact / (X.shape[0] * sep)


def dunn_index(data, labels, n_clusters=None) -> float:
    """Smallest between-cluster point distance over the largest cluster diameter.

    If ``n_clusters`` is given, every id in ``0..n_clusters-1`` must be used.
    A zero largest diameter gives ``inf``.
    """
    X = as_matrix(data)
    labels = np.asarray(labels)
    if labels.shape != (X.shape[0],):
        raise ValueError("labels must have one entry per sample")
    ids = np.unique(labels)
    if n_clusters is not None:
        missing = sorted(set(range(n_clusters)) - set(ids.tolist()))
        if missing:
            raise ValueError(f"empty clusters: {missing}")
    if ids.size < 2:
        raise ValueError("Dunn index needs at least 2 non-empty clusters")
    groups = [X[labels == c] for c in ids]
    diameter = max(float(pdist(g).max()) if len(g) > 1 else 0.0 for g in groups)
    separation = min(
        float(cdist(groups[a], groups[b]).min())
        for a in range(len(groups)) for b in range(a + 1, len(groups))
    )
    if diameter == 0:
        return math.inf
    return separation / diameter
