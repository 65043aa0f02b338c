"""Acceptance suite: one test per numbered criterion, each printing PASS/FAIL.

Lines are collected by the ``criterion`` fixture and shown in the terminal
summary under "acceptance criteria".
"""

import math
import time

import numpy as np
import pytest
from click.testing import CliRunner

from evfw import metrics
from evfw.baselines import BaselineOptions, fcm_fit, kmeans_fit
from evfw.cli import main
from evfw.core import check_stochastic
from evfw.dataset import MixtureSpec, synth_mixture, standardize
from evfw.evfwfkm import FitOptions, fit, update_memberships, update_weights
from evfw.experiment import ExperimentConfig, run_experiment, sweep_k

import oracles
from conftest import IRIS_CSV

GRID = [0.5, 1.0, 2.0, 4.0]


def random_instance(rng, n_max, m_max, ks):
    k = int(rng.choice(ks))
    n = int(rng.integers(k + 1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    X = rng.normal(size=(n, m)) * rng.uniform(0.2, 3.0, size=m) + rng.uniform(-2, 2, size=m)
    return X, k


def test_criterion_01_stochastic_every_iteration(criterion):
    rng = np.random.default_rng(101)
    worst = 0.0
    checked = 0

    def cb(it, U, V, W, params):
        nonlocal worst, checked
        for P in (U, W):
            worst = max(worst, float(np.abs(P.sum(axis=1) - 1).max()),
                        float(np.maximum(-P, 0).max()), float(np.maximum(P - 1, 0).max()))
            check_stochastic(P, atol=1e-9)
        checked += 1

    start = time.perf_counter()
    for t in range(200):
        X, k = random_instance(rng, 50, 10, [2, 3, 4])
        fit(X, FitOptions(k=k, seed=t), callback=cb)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 10
    criterion(1, ok, f"200 instances, {checked} iterations, max simplex error {worst:.2e}, {elapsed:.2f}s (<10s)")
    assert ok


def test_criterion_02_monotone_descent(criterion):
    rng = np.random.default_rng(202)
    violations = 0
    start = time.perf_counter()
    for t in range(50):
        X, k = random_instance(rng, 50, 10, [2, 3, 4])
        model = fit(X, FitOptions(k=k, K1=1.0, K2=1.0, seed=t, adaptive_params=False))
        assert np.all(model.params.lam == 1.0) and np.all(model.params.gamma == 1.0)
        tr = np.array(model.objective_trace)
        violations += int(np.sum(tr[1:] > tr[:-1] + 1e-9 * np.abs(tr[:-1])))
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 10
    criterion(2, ok, f"50 instances, {violations} increases beyond 1e-9 relative, {elapsed:.2f}s (<10s)")
    assert ok


def _membership_multiplier(d_row, lam):
    # the constraint multiplier that makes the stationarity condition hold
    s = sum(math.exp(-d / lam) for d in d_row)
    return lam * (1 - math.log(s))


def test_criterion_03_kkt_stationarity(criterion):
    rng = np.random.default_rng(303)
    h = 1e-7
    worst = 0.0
    for _ in range(20):
        n, m, k = int(rng.integers(3, 11)), int(rng.integers(1, 5)), 2
        X = rng.uniform(0, 1, size=(n, m))
        V = rng.uniform(0, 1, size=(k, m))
        W0 = rng.dirichlet(np.ones(m), size=k)
        lam = rng.uniform(0.5, 2.0, size=n)
        gamma = rng.uniform(0.5, 2.0, size=k)
        U0 = rng.dirichlet(np.ones(k), size=n)
        # each block is checked at its own closed-form update, the other block held fixed
        U = update_memberships(X, V, W0, lam)
        W = update_weights(X, U0, V, gamma)
        # loop-evaluated costs, independent of the vectorized kernels
        d = [[sum(W0[j, l] * (X[i, l] - V[j, l]) ** 2 for l in range(m)) for j in range(k)] for i in range(n)]
        E = [[sum(U0[i, j] * (X[i, l] - V[j, l]) ** 2 for i in range(n)) for l in range(m)] for j in range(k)]
        alpha = [_membership_multiplier(d[i], lam[i]) for i in range(n)]
        delta = [_membership_multiplier(E[j], gamma[j]) for j in range(k)]

        def L(Uc, Wc):
            return oracles.lagrangian(X, Uc, V, Wc, lam, gamma, alpha, delta)

        for i in range(n):
            for j in range(k):
                def f(x, i=i, j=j):
                    P = U.copy()
                    P[i, j] = x
                    return L(P, W0)
                worst = max(worst, abs(oracles.central_difference(f, U[i, j], h)))
        for j in range(k):
            for l in range(m):
                def g(x, j=j, l=l):
                    P = W.copy()
                    P[j, l] = x
                    return L(U0, P)
                worst = max(worst, abs(oracles.central_difference(g, W[j, l], h)))
    ok = worst <= 1e-4
    criterion(3, ok, f"20 instances, max |dL| {worst:.2e} (<=1e-4)")
    assert ok


def test_criterion_04_updates_match_direct_minimization(criterion):
    rng = np.random.default_rng(404)
    worst = 0.0
    for t in range(10):
        n = int(rng.integers(3, 9))
        if t % 2 == 0:
            # weights with m=2: each cluster row is a 2-simplex problem
            k, m = int(rng.integers(1, 4)), 2
            X = rng.uniform(0, 1, size=(n, m))
            U = rng.dirichlet(np.ones(k), size=n)
            V = rng.uniform(0, 1, size=(k, m))
            gamma = rng.uniform(0.2, 3.0, size=k)
            got = update_weights(X, U, V, gamma)
            for j in range(k):
                costs = [sum(U[i, j] * (X[i, l] - V[j, l]) ** 2 for i in range(n)) for l in range(m)]
                ref = oracles.minimize_two_simplex(costs, gamma[j])
                worst = max(worst, float(np.abs(got[j] - ref).max()))
        else:
            # memberships with k=2: each point row is a 2-simplex problem
            k, m = 2, int(rng.integers(1, 5))
            X = rng.uniform(0, 1, size=(n, m))
            V = rng.uniform(0, 1, size=(k, m))
            W = rng.dirichlet(np.ones(m), size=k)
            lam = rng.uniform(0.05, 2.0, size=n)
            got = update_memberships(X, V, W, lam)
            for i in range(n):
                costs = [sum(W[j, l] * (X[i, l] - V[j, l]) ** 2 for l in range(m)) for j in range(k)]
                ref = oracles.minimize_two_simplex(costs, lam[i])
                worst = max(worst, float(np.abs(got[i] - ref).max()))
    ok = worst <= 1e-6
    criterion(4, ok, f"10 instances, max deviation from direct minimizer {worst:.2e} (<=1e-6)")
    assert ok


def test_criterion_05_metrics_match_enumeration(criterion):
    parts = oracles.set_partitions(6, 3)
    assert len(parts) == 122  # Bell-type count of <=3-block partitions of 6 points
    mismatches = {"ar": 0, "ri": 0, "nmi": 0}
    worst_nmi = 0.0
    for a in parts:
        for b in parts:
            if metrics.accuracy_rate(a, b) != oracles.accuracy_rate(a, b):
                mismatches["ar"] += 1
            if metrics.rand_index(a, b) != oracles.rand_index(a, b):
                mismatches["ri"] += 1
            err = abs(metrics.nmi(a, b) - oracles.nmi(a, b))
            worst_nmi = max(worst_nmi, err)
            if err > 1e-12:
                mismatches["nmi"] += 1
    ok = not any(mismatches.values())
    criterion(5, ok, f"{len(parts) ** 2} partition pairs, mismatches {mismatches}, max NMI error {worst_nmi:.1e}")
    assert ok


@pytest.fixture(scope="module")
def iris_grid(tmp_path_factory):
    cfg = ExperimentConfig(dataset=str(IRIS_CSV), label_column="species", scaling="min-max", k=3,
                           trials=10, K1=GRID, K2=GRID, out=str(tmp_path_factory.mktemp("iris")))
    start = time.perf_counter()
    report = run_experiment(cfg, write=False)
    return report, time.perf_counter() - start


def test_criterion_06_iris_reproduction(criterion, iris_grid):
    report, elapsed = iris_grid
    s = report.best["summary"]
    ar, ri, nmi = s["ar"]["mean"], s["ri"]["mean"], s["nmi"]["mean"]
    ok = ar >= 85 and ri >= 85 and nmi >= 65 and elapsed < 30
    criterion(6, ok, f"K1={report.best['K1']:g} K2={report.best['K2']:g}: AR {ar:.2f} (>=85), "
                     f"RI {ri:.2f} (>=85), NMI {nmi:.2f} (>=65), {elapsed:.2f}s (<30s)")
    assert ok


def test_criterion_07_iris_baselines(criterion, iris):
    start = time.perf_counter()
    km = np.mean([metrics.accuracy_rate(kmeans_fit(iris, BaselineOptions(k=3, seed=s)).labels, iris.labels)
                  for s in range(10)]) * 100
    fcm = np.mean([metrics.accuracy_rate(fcm_fit(iris, BaselineOptions(k=3, seed=s)).labels, iris.labels)
                   for s in range(10)]) * 100
    elapsed = time.perf_counter() - start
    km_ok, fcm_ok = abs(km - 88.67) <= 6, abs(fcm - 82.67) <= 6
    ok = km_ok and fcm_ok and elapsed < 10
    criterion(7, ok, f"KM AR {km:.2f} (88.67+-6: {'ok' if km_ok else 'out'}), "
                     f"FCM AR {fcm:.2f} (82.67+-6: {'ok' if fcm_ok else 'out'}), {elapsed:.2f}s (<10s)")
    assert ok


def test_criterion_08_iris_internal_indices(criterion, iris_grid):
    report, _ = iris_grid
    s = report.best["summary"]
    pc, ce = s["pc"]["mean"], s["ce"]["mean"]
    K1, K2 = report.best["K1"], report.best["K2"]
    picks = []
    for seed in range(10):
        cfg = ExperimentConfig(dataset=str(IRIS_CSV), label_column="species", k="2-6", trials=1,
                               seed=seed, K1=K1, K2=K2)
        picks.append(sweep_k(cfg, write=False).best_k("pc"))
    hits = picks.count(3)
    pc_ok, ce_ok, k_ok = 0.72 <= pc <= 0.92, 0.19 <= ce <= 0.40, hits >= 7
    ok = pc_ok and ce_ok and k_ok
    criterion(8, ok, f"PC {pc:.3f} in [0.72,0.92]: {pc_ok}; CE {ce:.3f} in [0.19,0.40]: {ce_ok}; "
                     f"sweep picks k=3 in {hits}/10 seeds (>=7), picks {picks}")
    assert ok


def informative_mixture(seed=0, m=2000, informative=20, k=3, per_cluster=30):
    """Informative features sit tightly around per-cluster means; the rest are shared noise."""
    rng = np.random.default_rng(seed)
    comps = []
    for _ in range(k):
        mean = np.full(m, 0.5)
        mean[:informative] = rng.uniform(0, 1, informative)
        sd = np.full(m, 0.3)
        sd[:informative] = 0.05
        comps.append((tuple(mean), tuple(sd), per_cluster))
    return standardize(synth_mixture(MixtureSpec(comps, seed=seed + 1)), "min-max")


def test_criterion_09_weights_find_informative_features(criterion):
    data = informative_mixture()
    masses = []
    for seed in range(5):
        model = fit(data, FitOptions(k=3, seed=seed))
        masses.append(model.W[:, :20].sum(axis=1))
    masses = np.array(masses)
    ok = bool(np.all(masses >= 0.6))
    criterion(9, ok, f"2000 features, 20 informative, 5 seeds: min per-cluster informative mass "
                     f"{masses.min():.4f}, max {masses.max():.4f} (>=0.60 required)")
    assert ok


def test_criterion_10_deterministic_reports(criterion, tmp_path):
    config = tmp_path / "iris.yaml"
    config.write_text(f"data:\n  dataset: {IRIS_CSV}\n  label_column: species\n"
                      "model:\n  k: 3\n  K1: [0.5, 1]\n  K2: [1, 4]\nprotocol:\n  trials: 3\n")
    files = ("summary.json", "trials.csv", "weights.csv", "lambda_trace.csv", "objective_trace.csv")
    snapshots = []
    for run in range(2):
        out = tmp_path / "out"
        result = CliRunner().invoke(main, ["--quiet", "--out", str(out), "experiment", "--config", str(config)])
        assert result.exit_code == 0, result.output
        snapshots.append({f: (out / f).read_bytes() for f in files})
    differing = [f for f in files if snapshots[0][f] != snapshots[1][f]]
    ok = not differing
    criterion(10, ok, f"two runs of one config, {len(files)} report files, differing: {differing or 'none'}")
    assert ok
