"""Multi-trial experiment protocol, k sweeps and report/figure-data files.

Every fit in a protocol uses seeds ``seed, seed + 1, ..., seed + trials - 1``.
When K1/K2 are given as grids, each grid point runs the full protocol and the
winner is chosen by mean AR (labels present) or mean PC (no labels).

Report files are deterministic functions of the config and dataset bytes;
per-trial wall times go to a separate ``timings.csv``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import metrics
from .baselines import BaselineOptions, fcm_fit, kmeans_fit
from .dataset import SCALINGS, Dataset, load_csv, standardize
from .evfwfkm import ClusterModel, FitOptions, fit

log = logging.getLogger(__name__)

METHODS = ("evfwfkm", "kmeans", "fcm")
METRICS = ("ar", "ri", "nmi", "pc", "ce", "xb", "di")
EXTERNAL = ("ar", "ri", "nmi")
CONFIG_SECTIONS = ("data", "model", "protocol", "output")


class ConfigError(ValueError):
    pass


def parse_int_list(value) -> list[int]:
    """Accept ``3``, ``[2, 3]``, ``"2,3"`` or the inclusive range ``"2-6"``."""
    try:
        out = _int_list(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad integer list {value!r}: {exc}") from exc
    if not out:
        raise ConfigError("empty k list")
    return out


def _int_list(value):
    if isinstance(value, (list, tuple)):
        out = [int(v) for v in value]
    elif isinstance(value, str):
        out = []
        for part in value.replace(" ", "").split(","):
            if "-" in part:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    else:
        out = [int(value)]
    return out


def parse_float_list(value) -> list[float]:
    try:
        out = _float_list(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad number list {value!r}: {exc}") from exc
    if not out:
        raise ConfigError("empty parameter grid")
    return out


def _float_list(value):
    if isinstance(value, (list, tuple)):
        out = [float(v) for v in value]
    elif isinstance(value, str):
        out = [float(v) for v in value.replace(" ", "").split(",") if v]
    else:
        out = [float(value)]
    return out


@dataclass
class ExperimentConfig:
    dataset: str = ""
    label_column: Optional[str] = None
    delimiter: str = ","
    scaling: str = "min-max"
    method: str = "evfwfkm"
    k: list = field(default_factory=lambda: [2])
    K1: list = field(default_factory=lambda: [1.0])
    K2: list = field(default_factory=lambda: [1.0])
    fuzzifier: float = 2.0
    tol: float = 1e-6
    max_iter: int = 100
    trials: int = 10
    seed: int = 0
    jobs: int = 1
    out: str = "results"

    def __post_init__(self):
        self.k = parse_int_list(self.k)
        self.K1 = parse_float_list(self.K1)
        self.K2 = parse_float_list(self.K2)
        if self.label_column is not None:
            self.label_column = str(self.label_column)
        self.trials, self.max_iter, self.seed, self.jobs = (
            int(self.trials), int(self.max_iter), int(self.seed), int(self.jobs))
        self.fuzzifier, self.tol = float(self.fuzzifier), float(self.tol)

    def validate(self):
        if not self.dataset:
            raise ConfigError("no dataset path given")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.scaling not in SCALINGS:
            raise ConfigError(f"unknown scaling {self.scaling!r}; choose from {SCALINGS}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if any(k < 1 for k in self.k):
            raise ConfigError("k must be positive")
        if any(v <= 0 for v in self.K1 + self.K2):
            raise ConfigError("K1/K2 values must be positive")
        return self

    @classmethod
    def from_mapping(cls, mapping: dict, **overrides) -> "ExperimentConfig":
        """Build from a (possibly sectioned) mapping; ``None`` overrides are ignored."""
        flat = {}
        for key, value in (mapping or {}).items():
            if key in CONFIG_SECTIONS and isinstance(value, dict):
                flat.update(value)
            else:
                flat[key] = value
        flat.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(flat) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**flat)

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            mapping = yaml.safe_load(fh) or {}
        if not isinstance(mapping, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_mapping(mapping, **overrides)

    def to_dict(self) -> dict:
        return asdict(self)

    def report_dict(self) -> dict:
        """Config as echoed into reports; the output location is left out."""
        out = self.to_dict()
        del out["out"], out["jobs"]
        return out


@dataclass
class TrialReport:
    method: str
    k: int
    K1: Optional[float]
    K2: Optional[float]
    seed: int
    iterations: int
    converged: bool
    objective: float
    ar: Optional[float]
    ri: Optional[float]
    nmi: Optional[float]
    pc: float
    ce: float
    xb: Optional[float]
    di: Optional[float]
    wall_ms: float = 0.0


TRIAL_COLUMNS = ("method", "k", "K1", "K2", "seed", "iterations", "converged", "objective",
                 "ar_pct", "ri_pct", "nmi_pct", "pc", "ce", "xb", "di")


# -- formatting ---------------------------------------------------------------

def fmt(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.6g}"


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.6g}") if math.isfinite(x) else str(x)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_json_ready(obj), indent=2, sort_keys=True) + "\n"


def write_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else fmt(cell) for cell in row])
    return buf.getvalue()


def _pct(x):
    return None if x is None else 100.0 * x


def trial_row(t: TrialReport) -> list:
    return [t.method, t.k, t.K1, t.K2, t.seed, t.iterations, t.converged, t.objective,
            _pct(t.ar), _pct(t.ri), _pct(t.nmi), t.pc, t.ce, t.xb, t.di]


# -- single trials ------------------------------------------------------------

def load_dataset(cfg: ExperimentConfig) -> Dataset:
    data = load_csv(cfg.dataset, cfg.label_column, cfg.delimiter)
    return standardize(data, cfg.scaling)


def fit_model(data: Dataset, method: str, k: int, K1: float, K2: float, seed: int,
              cfg: ExperimentConfig) -> ClusterModel:
    if method == "evfwfkm":
        return fit(data, FitOptions(k=k, K1=K1, K2=K2, max_iter=cfg.max_iter, tol=cfg.tol, seed=seed))
    opts = BaselineOptions(k=k, fuzzifier=cfg.fuzzifier, max_iter=cfg.max_iter, tol=cfg.tol, seed=seed)
    if method == "kmeans":
        return kmeans_fit(data, opts)
    if method == "fcm":
        return fcm_fit(data, opts)
    raise ConfigError(f"unknown method {method!r}")


def evaluate(model: ClusterModel, data: Dataset) -> dict:
    """All applicable metrics as fractions; undefined ones are None."""
    labels = model.labels
    out = dict.fromkeys(METRICS)
    if data.labels is not None:
        out["ar"] = metrics.accuracy_rate(labels, data.labels)
        out["ri"] = metrics.rand_index(labels, data.labels)
        out["nmi"] = metrics.nmi(labels, data.labels)
    out["pc"] = metrics.partition_coefficient(model.U)
    out["ce"] = metrics.classification_entropy(model.U)
    if model.k >= 2:
        out["xb"] = metrics.xie_beni(data, model.U, model.V)
    if np.unique(labels).size >= 2:
        out["di"] = metrics.dunn_index(data, labels)
    return out


def run_trial(data: Dataset, cfg: ExperimentConfig, k: int, K1: float, K2: float, seed: int,
              method: Optional[str] = None) -> tuple[TrialReport, ClusterModel]:
    method = method or cfg.method
    start = time.perf_counter()
    model = fit_model(data, method, k, K1, K2, seed, cfg)
    wall = (time.perf_counter() - start) * 1000.0
    scores = evaluate(model, data)
    weighted = method == "evfwfkm"
    report = TrialReport(method=method, k=k, K1=K1 if weighted else None, K2=K2 if weighted else None,
                         seed=seed, iterations=model.iterations, converged=model.converged,
                         objective=model.objective_trace[-1], wall_ms=wall, **scores)
    return report, model


def summarize(trials: list[TrialReport]) -> dict:
    """Mean and population standard deviation of every metric over ``trials``."""
    out = {"n_trials": len(trials), "n_converged": sum(t.converged for t in trials)}
    for name in METRICS + ("objective", "iterations"):
        vals = [getattr(t, name) for t in trials]
        if any(v is None for v in vals):
            out[name] = {"mean": None, "std": None}
            continue
        arr = np.array(vals, dtype=float)
        scale = 100.0 if name in EXTERNAL else 1.0
        with np.errstate(invalid="ignore"):
            out[name] = {"mean": float(arr.mean()) * scale, "std": float(arr.std()) * scale}
    return out


def _grid(cfg: ExperimentConfig):
    if cfg.method != "evfwfkm":
        return [(cfg.K1[0], cfg.K2[0])]
    return [(a, b) for a in cfg.K1 for b in cfg.K2]


def run_protocol(data: Dataset, cfg: ExperimentConfig, k: int):
    """Every grid point x every trial at a fixed ``k``.

    Returns ``(points, best_index, first_models)`` where each point is a dict
    with K1, K2, the trial reports and their summary.
    """
    n = data.n
    if k > n:
        raise ConfigError(f"k={k} exceeds the number of samples n={n}")
    seeds = [cfg.seed + t for t in range(cfg.trials)]
    points, first_models = [], []
    for K1, K2 in _grid(cfg):
        def one(seed, K1=K1, K2=K2):
            return run_trial(data, cfg, k, K1, K2, seed)
        if cfg.jobs > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                results = list(pool.map(one, seeds))
        else:
            results = [one(s) for s in seeds]
        trials = [r for r, _ in results]
        first_models.append(results[0][1])
        points.append({"K1": K1, "K2": K2, "trials": trials, "summary": summarize(trials)})
        log.debug("k=%d K1=%g K2=%g done", k, K1, K2)
    key = "ar" if data.labels is not None else "pc"
    scores = [p["summary"][key]["mean"] for p in points]
    best = int(np.argmax([(-math.inf if s is None or math.isnan(s) else s) for s in scores]))
    return points, best, first_models


# -- figure data --------------------------------------------------------------

def export_figures(model: ClusterModel, dataset: Dataset, out_dir, prefix: str = "") -> dict:
    """Write weight matrix, lambda statistics per iteration and the objective trace."""
    out_dir = Path(out_dir)
    paths = {
        "weights": out_dir / f"{prefix}weights.csv",
        "lambda_trace": out_dir / f"{prefix}lambda_trace.csv",
        "objective_trace": out_dir / f"{prefix}objective_trace.csv",
    }
    write_atomic(paths["weights"], csv_text(
        ("cluster",) + tuple(dataset.feature_names),
        ([j] + list(row) for j, row in enumerate(model.W))))
    lam = model.lambda_trace
    write_atomic(paths["lambda_trace"], csv_text(
        ("iteration", "lambda_min", "lambda_mean", "lambda_max"),
        ([i + 1, r.min(), r.mean(), r.max()] for i, r in enumerate(lam)) if lam.size else []))
    write_atomic(paths["objective_trace"], csv_text(
        ("iteration", "objective"),
        ([i + 1, v] for i, v in enumerate(model.objective_trace))))
    return paths


# -- experiment / sweep -------------------------------------------------------

@dataclass
class ExperimentReport:
    config: dict
    dataset: dict
    k: int
    grid: list
    selected: int
    trials: list
    model: ClusterModel = field(repr=False, default=None)

    @property
    def best(self) -> dict:
        return self.grid[self.selected]

    def summary_document(self) -> dict:
        return {
            "config": self.config,
            "dataset": self.dataset,
            "k": self.k,
            "selection_metric": "ar" if self.dataset["has_labels"] else "pc",
            "selected": {"K1": self.best["K1"], "K2": self.best["K2"]},
            "summary": self.best["summary"],
            "grid": [{"K1": p["K1"], "K2": p["K2"], "summary": p["summary"]} for p in self.grid],
        }


def _dataset_info(data: Dataset) -> dict:
    return {"name": data.name, "n": data.n, "m": data.m, "has_labels": data.labels is not None,
            "n_classes": data.n_classes}


def run_experiment(cfg: ExperimentConfig, data: Optional[Dataset] = None, write: bool = True) -> ExperimentReport:
    """Trial protocol at a single k; writes summary.json, trials.csv, timings.csv and figure data."""
    cfg.validate()
    if len(cfg.k) != 1:
        raise ConfigError("experiment takes a single k; use sweep-k for a range")
    data = data if data is not None else load_dataset(cfg)
    k = cfg.k[0]
    points, best, models = run_protocol(data, cfg, k)
    all_trials = [t for p in points for t in p["trials"]]
    report = ExperimentReport(config=cfg.report_dict(), dataset=_dataset_info(data), k=k, grid=points,
                              selected=best, trials=all_trials, model=models[best])
    if write:
        out = Path(cfg.out)
        write_atomic(out / "summary.json", dumps_json(report.summary_document()))
        write_atomic(out / "trials.csv", csv_text(TRIAL_COLUMNS, map(trial_row, all_trials)))
        write_atomic(out / "timings.csv", csv_text(
            ("method", "k", "K1", "K2", "seed", "wall_ms"),
            ([t.method, t.k, t.K1, t.K2, t.seed, t.wall_ms] for t in all_trials)))
        export_figures(report.model, data, out)
    return report


SWEEP_INDICES = {"pc": max, "ce": min, "xb": min, "di": max}


@dataclass
class SweepReport:
    config: dict
    dataset: dict
    rows: list

    def best_k(self, index: str = "pc") -> Optional[int]:
        pick = SWEEP_INDICES[index]
        scored = [(r[index], r["k"]) for r in self.rows if r[index] is not None and not math.isnan(r[index])]
        if not scored:
            return None
        target = pick(s for s, _ in scored)
        return min(k for s, k in scored if s == target)

    def document(self) -> dict:
        return {"config": self.config, "dataset": self.dataset, "rows": self.rows,
                "optimal_k": {name: self.best_k(name) for name in SWEEP_INDICES}}


SWEEP_COLUMNS = ("k", "K1", "K2", "pc", "ce", "xb", "di", "ar_pct", "ri_pct", "nmi_pct")


def sweep_k(cfg: ExperimentConfig, data: Optional[Dataset] = None, write: bool = True) -> SweepReport:
    """Run the protocol for every k in the range and tabulate mean validity indices."""
    cfg.validate()
    data = data if data is not None else load_dataset(cfg)
    for k in cfg.k:
        if not 2 <= k <= data.n - 1:
            raise ConfigError(f"sweep k={k} outside [2, n-1] = [2, {data.n - 1}]")
    rows = []
    for k in cfg.k:
        points, best, _ = run_protocol(data, cfg, k)
        s = points[best]["summary"]
        weighted = cfg.method == "evfwfkm"
        rows.append({
            "k": k,
            "K1": points[best]["K1"] if weighted else None,
            "K2": points[best]["K2"] if weighted else None,
            **{name: s[name]["mean"] for name in ("pc", "ce", "xb", "di")},
            **{f"{name}_pct": s[name]["mean"] for name in EXTERNAL},
        })
    report = SweepReport(cfg.report_dict(), _dataset_info(data), rows)
    if write:
        out = Path(cfg.out)
        write_atomic(out / "sweep.csv", csv_text(SWEEP_COLUMNS, ([r[c] for c in SWEEP_COLUMNS] for r in rows)))
        write_atomic(out / "sweep.json", dumps_json(report.document()))
    return report
