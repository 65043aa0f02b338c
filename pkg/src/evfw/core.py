"""Shared numerics: dissimilarities, entropy helpers, softmin and the objective.

Shapes used throughout the package::

    X  (n, m)  data
    U  (n, k)  fuzzy partition, rows on the probability simplex
    V  (k, m)  cluster centers
    W  (k, m)  feature weights, rows on the probability simplex
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_FLOOR = 1e-300
STOCHASTIC_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class ControlParams:
    """Per-point ``lam`` (n,) and per-cluster ``gamma`` (k,) plus the constants K1, K2."""

    lam: np.ndarray
    gamma: np.ndarray
    K1: float = 1.0
    K2: float = 1.0

    def __post_init__(self):
        for attr in ("lam", "gamma"):
            arr = np.array(getattr(self, attr), dtype=float)
            if arr.ndim != 1 or not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ValueError(f"{attr} must be a vector of finite, strictly positive values")
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        if not (self.K1 > 0 and self.K2 > 0):
            raise ValueError("K1 and K2 must be positive")


def as_matrix(data) -> np.ndarray:
    """Accept a Dataset or anything array-like; return a 2-d float array."""
    values = getattr(data, "values", data)
    X = np.asarray(values, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d data matrix, got shape {X.shape}")
    return X


def dissimilarity(x, v) -> np.ndarray:
    """Per-feature squared difference between a sample and a center."""
    x, v = np.asarray(x, float), np.asarray(v, float)
    if x.shape != v.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {v.shape}")
    return (x - v) ** 2


def dissimilarities(X, V) -> np.ndarray:
    """All squared feature differences, shape (n, k, m)."""
    X, V = np.asarray(X, float), np.asarray(V, float)
    if X.shape[1] != V.shape[1]:
        raise ValueError(f"feature mismatch: data has {X.shape[1]}, centers have {V.shape[1]}")
    return (X[:, None, :] - V[None, :, :]) ** 2


def weighted_distances(X, V, W) -> np.ndarray:
    """``d[i, j] = sum_l W[j, l] * (X[i, l] - V[j, l])**2``, shape (n, k)."""
    return np.einsum("ijl,jl->ij", dissimilarities(X, V), W)


def feature_dispersion(X, U, V) -> np.ndarray:
    """``E[j, l] = sum_i U[i, j] * (X[i, l] - V[j, l])**2``, shape (k, m)."""
    return np.einsum("ij,ijl->jl", U, dissimilarities(X, V))


def xlogx(P) -> np.ndarray:
    """Elementwise ``p * log p`` with ``0 * log 0 = 0``."""
    P = np.asarray(P, float)
    return P * np.log(np.maximum(P, LOG_FLOOR))


def row_entropy(P) -> np.ndarray:
    """Shannon entropy (nats) of each row."""
    return -xlogx(P).sum(axis=-1)


def softmin(costs, temperature) -> np.ndarray:
    """Row-wise ``exp(-c / t) / sum exp(-c / t)`` with max-shift for stability.

    ``temperature`` holds one positive value per row.
    """
    C = np.asarray(costs, float)
    t = np.asarray(temperature, float).reshape(-1, 1)
    if np.any(t <= 0):
        raise ValueError("softmin temperature must be strictly positive")
    Z = -C / t
    Z -= Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def check_stochastic(P, name="matrix", atol=STOCHASTIC_ATOL):
    """Raise ValueError unless every row of ``P`` lies on the simplex."""
    P = np.asarray(P, float)
    if P.ndim != 2:
        raise ValueError(f"{name} must be 2-d")
    if np.any(P < -atol) or np.any(P > 1 + atol):
        raise ValueError(f"{name} has entries outside [0, 1]")
    err = np.abs(P.sum(axis=1) - 1).max()
    if err > atol:
        raise ValueError(f"{name} rows do not sum to 1 (max error {err:.3g})")


def objective_terms(data, U, V, W, lam, gamma=None) -> tuple[float, float, float]:
    """The three terms of the objective: dispersion, membership and weight negentropy.

    ``lam`` may be a :class:`ControlParams`, in which case ``gamma`` is omitted.
    """
    if isinstance(lam, ControlParams):
        lam, gamma = lam.lam, lam.gamma
    X = as_matrix(data)
    U, V, W = (np.asarray(a, float) for a in (U, V, W))
    lam, gamma = np.asarray(lam, float), np.asarray(gamma, float)
    n, m = X.shape
    k = V.shape[0]
    if U.shape != (n, k) or V.shape != (k, m) or W.shape != (k, m):
        raise ValueError(f"shape mismatch: X{X.shape} U{U.shape} V{V.shape} W{W.shape}")
    if lam.shape != (n,) or gamma.shape != (k,):
        raise ValueError(f"shape mismatch: lambda{lam.shape} gamma{gamma.shape}")
    dispersion = float(np.sum(U * weighted_distances(X, V, W)))
    membership = float(np.dot(lam, xlogx(U).sum(axis=1)))
    weight = float(np.dot(gamma, xlogx(W).sum(axis=1)))
    return dispersion, membership, weight


def objective(data, U, V, W, lam, gamma=None) -> float:
    return sum(objective_terms(data, U, V, W, lam, gamma))
