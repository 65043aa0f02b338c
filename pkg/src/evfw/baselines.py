"""Reference clusterers: Lloyd's k-means and standard fuzzy c-means.

Both seed their centers with :func:`evfw.evfwfkm.sample_centers`, so a given
seed starts every method from the same rows. Models report uniform feature
weights and no control parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_matrix, dissimilarities
from .evfwfkm import ClusterModel, sample_centers, update_centers


@dataclass(frozen=True)
class BaselineOptions:
    k: int
    fuzzifier: float = 2.0
    max_iter: int = 100
    tol: float = 1e-6
    seed: int = 0

    def validate(self, n=None):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if n is not None and self.k > n:
            raise ValueError(f"k={self.k} exceeds the number of samples n={n}")
        if not self.fuzzifier > 1:
            raise ValueError("fuzzifier must be > 1")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


def _sq_dist(X, V):
    return dissimilarities(X, V).sum(axis=2)


def kmeans_fit(data, opts: BaselineOptions) -> ClusterModel:
    """Lloyd iterations until the assignment stops changing."""
    X = as_matrix(data)
    n, m = X.shape
    opts.validate(n)
    k = opts.k
    W = np.full((k, m), 1.0 / m)
    V = sample_centers(X, k, opts.seed)

    labels = None
    trace = []
    converged = False
    for _ in range(opts.max_iter):
        new = np.argmin(_sq_dist(X, V), axis=1)
        if labels is not None and np.array_equal(new, labels):
            converged = True
            break
        labels = new
        U = np.eye(k)[labels]
        V = update_centers(X, U, W)
        trace.append(float(np.sum(U * _sq_dist(X, V))))
    U = np.eye(k)[labels]
    return ClusterModel(U=U, V=V, W=W, params=None, objective_trace=tuple(trace),
                        iterations=len(trace), converged=converged, method="kmeans")


def fcm_memberships(X, V, fuzzifier: float = 2.0) -> np.ndarray:
    """Classic FCM memberships; a point sitting on centers splits evenly among them."""
    d = _sq_dist(as_matrix(X), np.asarray(V, float))
    U = np.empty_like(d)
    zero = d <= 0
    on_center = zero.any(axis=1)
    if on_center.any():
        U[on_center] = zero[on_center] / zero[on_center].sum(axis=1, keepdims=True)
    rest = ~on_center
    if rest.any():
        # Normalize by the row minimum before the power to avoid overflow.
        ratio = d[rest] / d[rest].min(axis=1, keepdims=True)
        inv = ratio ** (-1.0 / (fuzzifier - 1.0))
        U[rest] = inv / inv.sum(axis=1, keepdims=True)
    return U


def fcm_objective(X, U, V, fuzzifier: float = 2.0) -> float:
    return float(np.sum(U ** fuzzifier * _sq_dist(as_matrix(X), V)))


def fcm_fit(data, opts: BaselineOptions) -> ClusterModel:
    X = as_matrix(data)
    n, m = X.shape
    opts.validate(n)
    k = opts.k
    W = np.full((k, m), 1.0 / m)
    V = sample_centers(X, k, opts.seed)

    trace = []
    converged = False
    for it in range(opts.max_iter):
        U = fcm_memberships(X, V, opts.fuzzifier)
        V = update_centers(X, U ** opts.fuzzifier, W)
        trace.append(fcm_objective(X, U, V, opts.fuzzifier))
        if it and abs(trace[-2] - trace[-1]) <= opts.tol * max(abs(trace[-2]), np.finfo(float).tiny):
            converged = True
            break
    return ClusterModel(U=U, V=V, W=W, params=None, objective_trace=tuple(trace),
                        iterations=len(trace), converged=converged, method="fcm")
