"""Dataset ingestion, feature scaling and synthetic mixtures.

A :class:`Dataset` is an immutable ``n x m`` float matrix plus optional
ground-truth labels. Labels are always stored as contiguous ids ``0..c-1``;
the original class names are kept in ``class_names``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

SCALINGS = ("min-max", "z-score", "none")


class DatasetError(ValueError):
    """Raised for malformed input files or invalid dataset contents."""


@dataclass(frozen=True, eq=False)
class Dataset:
    values: np.ndarray
    feature_names: tuple = ()
    labels: Optional[np.ndarray] = None
    name: str = "dataset"
    class_names: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DatasetError(f"values must be a 2-d matrix, got shape {values.shape}")
        n, m = values.shape
        if n < 2 or m < 1:
            raise DatasetError(f"need n >= 2 samples and m >= 1 features, got {n}x{m}")
        if not np.all(np.isfinite(values)):
            raise DatasetError("values contain NaN or Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

        names = tuple(self.feature_names) or tuple(f"f{i}" for i in range(m))
        if len(names) != m:
            raise DatasetError(f"{len(names)} feature names for {m} features")
        object.__setattr__(self, "feature_names", names)

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (n,):
                raise DatasetError(f"labels must have shape ({n},), got {labels.shape}")
            labels = labels.astype(np.int64)
            present = np.unique(labels)
            if not np.array_equal(present, np.arange(len(present))):
                raise DatasetError("labels must be contiguous ids 0..c-1; use canonical_labels()")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)
            if self.class_names and len(self.class_names) != len(present):
                raise DatasetError("class_names length does not match label count")
            object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return 0 if self.labels is None else int(self.labels.max()) + 1


def canonical_labels(raw: Sequence) -> tuple[np.ndarray, tuple]:
    """Map arbitrary label values to ids ``0..c-1``.

    Numeric labels are ordered numerically, anything else lexicographically.
    Returns the id vector and the sorted original names.
    """
    raw = [str(r).strip() for r in raw]
    try:
        keys = sorted(set(raw), key=float)
    except ValueError:
        keys = sorted(set(raw))
    index = {key: i for i, key in enumerate(keys)}
    return np.array([index[r] for r in raw], dtype=np.int64), tuple(keys)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _resolve_label_column(label_column, header, width) -> Optional[int]:
    if label_column is None:
        return None
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None:
            raise DatasetError(f"label column {label_column!r} given by name but file has no header")
        if label_column not in header:
            raise DatasetError(f"label column {label_column!r} not in header {header}")
        return header.index(label_column)
    idx = int(label_column)
    if idx < 0:
        idx += width
    if not 0 <= idx < width:
        raise DatasetError(f"label column index {label_column} out of range for {width} columns")
    return idx


def load_csv(
    path: Union[str, Path],
    label_column: Union[str, int, None] = None,
    delimiter: str = ",",
    name: Optional[str] = None,
) -> Dataset:
    """Read a delimited text file into a :class:`Dataset`.

    A header row is detected when the first row has a non-numeric cell outside
    the label column. ``label_column`` may be a header name or a 0-based index
    (negative indices count from the right). Error messages use 1-based
    row/column numbers as they appear in the file.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [(i, r) for i, r in enumerate(csv.reader(fh, delimiter=delimiter), start=1)
                    if any(c.strip() for c in r)]
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DatasetError(f"{path} is empty")

    width = len(rows[0][1])
    for lineno, row in rows:
        if len(row) != width:
            raise DatasetError(f"ragged row {lineno}: {len(row)} cells, expected {width}")

    first = [c.strip() for c in rows[0][1]]
    header = None
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        header = first
    label_idx = _resolve_label_column(label_column, header, width)
    if header is None and any(not _is_number(c) for j, c in enumerate(first) if j != label_idx):
        header = first
    body = rows[1:] if header is not None else rows

    feature_cols = [j for j in range(width) if j != label_idx]
    if not feature_cols:
        raise DatasetError("no feature columns left after removing the label column")
    values = np.empty((len(body), len(feature_cols)))
    raw_labels = []
    for r, (lineno, row) in enumerate(body):
        for c, j in enumerate(feature_cols):
            cell = row[j].strip()
            try:
                x = float(cell)
            except ValueError:
                raise DatasetError(f"non-numeric cell {cell!r} at (row {lineno}, col {j + 1})") from None
            if not math.isfinite(x):
                raise DatasetError(f"non-finite cell {cell!r} at (row {lineno}, col {j + 1})")
            values[r, c] = x
        if label_idx is not None:
            raw_labels.append(row[label_idx])

    feature_names = tuple(header[j] for j in feature_cols) if header is not None else ()
    labels, class_names = (canonical_labels(raw_labels) if label_idx is not None else (None, ()))
    return Dataset(values, feature_names, labels, name or path.stem, class_names)


def standardize(data: Dataset, method: str = "min-max") -> Dataset:
    """Scale every feature independently; constant features map to 0."""
    if method not in SCALINGS:
        raise DatasetError(f"unknown scaling {method!r}; choose from {SCALINGS}")
    X = data.values
    if method == "none":
        return data
    if method == "min-max":
        lo = X.min(axis=0)
        span = X.max(axis=0) - lo
        safe = np.where(span > 0, span, 1.0)
        out = np.where(span > 0, (X - lo) / safe, 0.0)
    else:
        mean = X.mean(axis=0)
        sd = X.std(axis=0, ddof=1)
        safe = np.where(sd > 0, sd, 1.0)
        out = np.where(sd > 0, (X - mean) / safe, 0.0)
    return Dataset(out, data.feature_names, data.labels, data.name, data.class_names)


@dataclass(frozen=True)
class MixtureSpec:
    """Axis-aligned Gaussian components as ``(mean, stddev, count)`` triples."""

    components: list = field(default_factory=list)
    seed: int = 0

    def validate(self) -> int:
        if not self.components:
            raise DatasetError("mixture needs at least one component")
        dim = None
        for i, (mean, sd, count) in enumerate(self.components):
            mean, sd = np.atleast_1d(mean), np.atleast_1d(sd)
            if dim is None:
                dim = mean.shape[0]
            if mean.shape != (dim,) or sd.shape != (dim,):
                raise DatasetError(f"component {i}: mean/stddev must both have length {dim}")
            if np.any(sd <= 0):
                raise DatasetError(f"component {i}: stddev must be strictly positive")
            if int(count) != count or count < 1:
                raise DatasetError(f"component {i}: count must be a positive integer")
        return dim


def synth_mixture(spec: MixtureSpec, name: str = "mixture") -> Dataset:
    """Draw a labeled sample, component by component, from ``spec``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    blocks, labels = [], []
    for j, (mean, sd, count) in enumerate(spec.components):
        mean, sd = np.atleast_1d(np.asarray(mean, float)), np.atleast_1d(np.asarray(sd, float))
        blocks.append(rng.normal(mean, sd, size=(int(count), mean.shape[0])))
        labels.extend([j] * int(count))
    return Dataset(np.vstack(blocks), labels=np.array(labels), name=name)
