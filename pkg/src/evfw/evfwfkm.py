"""Entropy-based variable feature weighted fuzzy k-means.

The fitter alternates closed-form block updates

1. feature weights ``W`` (softmin of per-feature cluster dispersion),
2. memberships ``U`` (softmin of weighted point-center distances),
3. centers ``V`` (membership-weighted means),
4. optionally the control parameters ``lam`` (per point) and ``gamma``
   (per cluster), rescaled from the previous iterate's dispersion/entropy ratio,

until the relative change of the objective drops below ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    ControlParams,
    as_matrix,
    check_stochastic,
    feature_dispersion,
    objective_terms,
    row_entropy,
    softmin,
    weighted_distances,
)

PARAM_FLOOR = 1e-8
PARAM_CEIL = 1e300
EMPTY_MASS = 1e-12


@dataclass(frozen=True)
class FitOptions:
    k: int
    K1: float = 1.0
    K2: float = 1.0
    max_iter: int = 100
    tol: float = 1e-6
    seed: int = 0
    adaptive_params: bool = True

    def validate(self, n: Optional[int] = None):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if n is not None and self.k > n:
            raise ValueError(f"k={self.k} exceeds the number of samples n={n}")
        if not (self.K1 > 0 and self.K2 > 0):
            raise ValueError("K1 and K2 must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """Result of a fit. ``params`` is None for the baseline clusterers."""

    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    params: Optional[ControlParams]
    objective_trace: tuple
    lambda_trace: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    iterations: int = 0
    converged: bool = False
    method: str = "evfwfkm"

    @property
    def k(self) -> int:
        return self.V.shape[0]

    @property
    def labels(self) -> np.ndarray:
        return harden(self.U)


def sample_centers(X, k: int, seed: int) -> np.ndarray:
    """``k`` distinct data rows chosen uniformly at random; shared by all methods."""
    X = as_matrix(X)
    if k > X.shape[0]:
        raise ValueError(f"cannot pick k={k} distinct rows from n={X.shape[0]} samples")
    rng = np.random.default_rng(seed)
    return X[rng.choice(X.shape[0], size=k, replace=False)].copy()


def init(data, opts: FitOptions) -> tuple[np.ndarray, np.ndarray, ControlParams]:
    X = as_matrix(data)
    n, m = X.shape
    opts.validate(n)
    V = sample_centers(X, opts.k, opts.seed)
    W = np.full((opts.k, m), 1.0 / m)
    params = ControlParams(np.full(n, float(opts.K1)), np.full(opts.k, float(opts.K2)), opts.K1, opts.K2)
    return V, W, params


def update_centers(data, U, W) -> np.ndarray:
    """Membership-weighted means; a center with (near) zero mass is reseeded.

    Reseeding picks the data row farthest, in weighted distance, from the
    nearest surviving center.
    """
    X = as_matrix(data)
    U, W = np.asarray(U, float), np.asarray(W, float)
    if U.shape[0] != X.shape[0] or W.shape != (U.shape[1], X.shape[1]):
        raise ValueError(f"shape mismatch: X{X.shape} U{U.shape} W{W.shape}")
    mass = U.sum(axis=0)
    V = (U.T @ X) / np.where(mass < EMPTY_MASS, 1.0, mass)[:, None]
    empty = np.flatnonzero(mass < EMPTY_MASS)
    if empty.size:
        alive = [j for j in range(U.shape[1]) if j not in set(empty)]
        for j in empty:
            if alive:
                d = weighted_distances(X, V[alive], W[alive]).min(axis=1)
                V[j] = X[int(np.argmax(d))]
            else:
                V[j] = X.mean(axis=0)
            alive.append(int(j))
    return V


def update_weights(data, U, V, gamma) -> np.ndarray:
    gamma = np.asarray(gamma, float)
    if np.any(gamma <= 0):
        raise ValueError("gamma must be strictly positive")
    return softmin(feature_dispersion(as_matrix(data), U, V), gamma)


def update_memberships(data, V, W, lam) -> np.ndarray:
    lam = np.asarray(lam, float)
    if np.any(lam <= 0):
        raise ValueError("lambda must be strictly positive")
    return softmin(weighted_distances(as_matrix(data), V, W), lam)


def _ratio(dispersion, entropy, scale):
    # Zero entropy (hard row) means a zero denominator: fall back to the floor.
    out = np.full(dispersion.shape, PARAM_FLOOR)
    ok = entropy > 0
    with np.errstate(over="ignore"):
        out[ok] = scale * dispersion[ok] / entropy[ok]
    return np.clip(out, PARAM_FLOOR, PARAM_CEIL)


def update_lambda(data, U, V, W, K1: float) -> np.ndarray:
    """Per-point ``K1 * sum_j u_ij d_ij / (-sum_j u_ij log u_ij)``."""
    dist = weighted_distances(as_matrix(data), V, W)
    return _ratio(np.sum(U * dist, axis=1), row_entropy(U), K1)


def update_gamma(data, U, V, W, K2: float) -> np.ndarray:
    """Per-cluster ``K2 * sum_il u_ij w_jl D_ijl / (-sum_l w_jl log w_jl)``."""
    dist = weighted_distances(as_matrix(data), V, W)
    return _ratio(np.sum(U * dist, axis=0), row_entropy(W), K2)


def harden(U) -> np.ndarray:
    """Crisp labels by row argmax; ties go to the lowest cluster index."""
    return np.argmax(np.asarray(U), axis=1)


def fit(data, opts: FitOptions, callback: Optional[Callable] = None) -> ClusterModel:
    """Run the alternating optimization.

    The starting partition is computed from the initial centers, uniform
    weights and initial ``lam``. ``callback(iteration, U, V, W, params)`` is
    invoked after every full update cycle with the parameters that were used
    in that cycle.
    """
    X = as_matrix(data)
    V, W, params = init(X, opts)
    lam, gamma = params.lam, params.gamma
    U = update_memberships(X, V, W, lam)

    trace, lam_trace = [], []
    converged = False
    for it in range(1, opts.max_iter + 1):
        W = update_weights(X, U, V, gamma)
        U = update_memberships(X, V, W, lam)
        V = update_centers(X, U, W)
        terms = objective_terms(X, U, V, W, lam, gamma)
        obj = sum(terms)
        trace.append(obj)
        lam_trace.append(lam.copy())
        if callback is not None:
            callback(it, U, V, W, ControlParams(lam, gamma, opts.K1, opts.K2))
        if opts.adaptive_params:
            lam = update_lambda(X, U, V, W, opts.K1)
            gamma = update_gamma(X, U, V, W, opts.K2)
        # The entropy term can cancel the dispersion almost exactly, so the
        # change is measured against the size of the terms, not their sum.
        if it > 1 and abs(trace[-2] - obj) <= opts.tol * max(scale, np.finfo(float).tiny):
            converged = True
            break
        scale = sum(abs(t) for t in terms)

    check_stochastic(U, "U")
    check_stochastic(W, "W")
    return ClusterModel(
        U=U,
        V=V,
        W=W,
        params=ControlParams(lam, gamma, opts.K1, opts.K2),
        objective_trace=tuple(trace),
        lambda_trace=np.array(lam_trace),
        iterations=len(trace),
        converged=converged,
    )
