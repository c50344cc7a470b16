"""Paired datasets: in-memory representation, CSV ingestion, encoding.

A :class:`PairedDataset` stores the two views as feature-by-sample
matrices.  Categorical columns are one-hot encoded with lexicographic
label order so every run of the same input produces the same layout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractViolationError,
    CsvParseError,
    EmptyDatasetError,
)

ROLES = ("x-continuous", "x-categorical", "y-continuous", "y-categorical", "ignore")


@dataclass
class Split:
    train_idx: np.ndarray
    test_idx: np.ndarray


@dataclass
class PairedDataset:
    """Paired samples of two variables, columns are samples.

    ``x_kind`` / ``y_kind`` are ``"continuous"`` or ``"onehot"``; for
    one-hot sides the category labels are kept in ``x_labels`` /
    ``y_labels`` in row order.  ``provenance`` records how the data was
    made (source descriptor, seeds, auxiliary arrays).
    """

    x: np.ndarray
    y: np.ndarray
    x_kind: str = "continuous"
    y_kind: str = "continuous"
    x_labels: tuple | None = None
    y_labels: tuple | None = None
    split: Split | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.ndim != 2 or self.y.ndim != 2:
            raise ContractViolationError("dataset views must be 2-D matrices")
        if self.x.shape[1] != self.y.shape[1]:
            raise ContractViolationError(
                f"x has {self.x.shape[1]} samples but y has {self.y.shape[1]}"
            )
        for kind, mat, labels, name in (
            (self.x_kind, self.x, self.x_labels, "x"),
            (self.y_kind, self.y, self.y_labels, "y"),
        ):
            if kind not in ("continuous", "onehot"):
                raise ContractViolationError(f"unknown kind {kind!r} for {name}")
            if kind == "onehot":
                if labels is None or len(labels) != mat.shape[0]:
                    raise ContractViolationError(f"{name} one-hot block needs labels per row")
                colsum = mat.sum(axis=0)
                if mat.shape[1] and not np.allclose(colsum, 1.0, atol=1e-9):
                    raise ContractViolationError(f"{name} one-hot columns must sum to 1")
        if self.split is not None:
            both = np.concatenate([self.split.train_idx, self.split.test_idx])
            if both.size and (both.min() < 0 or both.max() >= self.n):
                raise ContractViolationError("split indices out of range")

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def train_arrays(self):
        if self.split is None:
            return self.x, self.y
        return self.x[:, self.split.train_idx], self.y[:, self.split.train_idx]

    def test_arrays(self):
        if self.split is None or self.split.test_idx.size == 0:
            return None
        return self.x[:, self.split.test_idx], self.y[:, self.split.test_idx]


def one_hot_encode(values, labels=None):
    """Encode a sequence of category values as a labels x n 0/1 matrix."""
    values = list(values)
    if labels is None:
        labels = tuple(sorted(set(values)))
    index = {l: i for i, l in enumerate(labels)}
    mat = np.zeros((len(labels), len(values)))
    for j, v in enumerate(values):
        if v not in index:
            raise ContractViolationError(f"value {v!r} not in label set")
        mat[index[v], j] = 1.0
    return mat, tuple(labels)


def one_hot_decode(mat, labels):
    """Inverse of :func:`one_hot_encode` on its label set."""
    idx = np.argmax(mat, axis=0)
    return [labels[i] for i in idx]


def apply_standardization(stats, mat):
    """Shift/scale a feature matrix with stored per-row statistics."""
    mean = np.asarray(stats["mean"], dtype=np.float64)
    std = np.asarray(stats["std"], dtype=np.float64)
    mat = np.asarray(mat, dtype=np.float64)
    if mat.shape[0] != mean.size:
        raise ContractViolationError(
            f"feature count {mat.shape[0]} does not match stored statistics ({mean.size})"
        )
    return (mat - mean[:, None]) / std[:, None]


def make_split(n, test_fraction, seed):
    """Deterministic shuffled train/test split of ``range(n)``."""
    if not 0 <= test_fraction < 1:
        raise ContractViolationError("test_fraction must be in [0, 1)")
    order = np.random.default_rng(seed).permutation(n)
    n_test = int(round(n * test_fraction))
    return Split(train_idx=np.sort(order[n_test:]), test_idx=np.sort(order[:n_test]))


def load_csv(path, schema, standardize=False, test_fraction=0.0, split_seed=0):
    """Load a paired dataset from a delimited text file with a header.

    ``schema`` maps every header name to one of ``x-continuous``,
    ``x-categorical``, ``y-continuous``, ``y-categorical`` or
    ``ignore``.  Categorical columns are one-hot encoded in
    lexicographic label order; mixing categorical and continuous columns
    on the same side is not supported.  With ``standardize=True`` each
    continuous row is shifted/scaled to zero mean and unit variance
    using statistics of the training split only.
    """
    for col, role in schema.items():
        if role not in ROLES:
            raise ContractViolationError(f"unknown role {role!r} for column {col!r}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: file is empty", line=1) from None
        missing = [c for c in schema if c not in header]
        if missing:
            raise CsvParseError(f"{path}: schema columns missing from header: {missing}")
        unknown = [c for c in header if c not in schema]
        if unknown:
            raise CsvParseError(f"{path}: header columns not covered by schema: {unknown}")
        columns = {c: [] for c in header}
        n_rows = 0
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvParseError(
                    f"{path}: row has {len(row)} fields, header has {len(header)}",
                    line=line_no,
                )
            for c, cell in zip(header, row):
                role = schema[c]
                if role.endswith("continuous"):
                    try:
                        columns[c].append(float(cell))
                    except ValueError:
                        raise CsvParseError(
                            f"{path}: non-numeric value {cell!r} in continuous "
                            f"column {c!r}",
                            line=line_no,
                        ) from None
                else:
                    columns[c].append(cell)
            n_rows += 1
    if n_rows == 0:
        raise EmptyDatasetError(f"{path}: no data rows")

    def build_side(prefix):
        cont = [c for c in header if schema[c] == f"{prefix}-continuous"]
        cat = [c for c in header if schema[c] == f"{prefix}-categorical"]
        if cont and cat:
            raise ContractViolationError(
                f"{prefix} side mixes continuous and categorical columns"
            )
        if not cont and not cat:
            raise ContractViolationError(f"schema assigns no columns to the {prefix} side")
        if cont:
            return np.array([columns[c] for c in cont]), "continuous", None, cont
        blocks = []
        labels = []
        for c in cat:
            block, labs = one_hot_encode(columns[c])
            blocks.append(block)
            labels.extend((c, l) if len(cat) > 1 else l for l in labs)
        return np.vstack(blocks), "onehot", tuple(labels), cat

    x, x_kind, x_labels, x_cols = build_side("x")
    y, y_kind, y_labels, y_cols = build_side("y")
    split = make_split(n_rows, test_fraction, split_seed) if test_fraction > 0 else None
    provenance = {
        "source": "csv",
        "path": str(path),
        "x_columns": x_cols,
        "y_columns": y_cols,
        "standardize": bool(standardize),
        "test_fraction": test_fraction,
        "split_seed": split_seed,
    }
    if standardize:
        train = split.train_idx if split is not None else np.arange(n_rows)
        stats = {}
        for name, mat, kind in (("x", x, x_kind), ("y", y, y_kind)):
            if kind != "continuous":
                continue
            mean = mat[:, train].mean(axis=1)
            std = mat[:, train].std(axis=1)
            std = np.where(std > 0, std, 1.0)
            mat -= mean[:, None]
            mat /= std[:, None]
            stats[name] = {"mean": mean.tolist(), "std": std.tolist()}
        provenance["standardization"] = stats
    return PairedDataset(
        x=x, y=y, x_kind=x_kind, y_kind=y_kind,
        x_labels=x_labels, y_labels=y_labels, split=split, provenance=provenance,
    )


WINE_ATTRIBUTES = (
    "fixed acidity", "volatile acidity", "citric acid", "residual sugar",
    "chlorides", "free sulfur dioxide", "total sulfur dioxide", "density",
    "pH", "sulphates", "alcohol",
)

WINE_SCHEMA = {name: "x-continuous" for name in WINE_ATTRIBUTES}
WINE_SCHEMA["quality"] = "y-categorical"


def synthetic_wine_csv(path, n_samples=4898, seed=0):
    """Write a wine-quality-shaped CSV with a known dependence structure.

    Stand-in for the UCI wine quality file (same header: 11 continuous
    attributes plus a 6-level ``quality`` column).  Samples fall into
    three well-separated attribute clusters (poor, medium, high); the
    quality grade is drawn within the cluster, so exactly two component
    correlations are close to one and the rest are near zero.  Useful
    where the original file cannot be shipped; any real CSV with the
    same header works interchangeably.
    """
    rng = np.random.default_rng(seed)
    group = rng.integers(0, 3, size=n_samples)  # 0 poor, 1 medium, 2 high
    # Cluster centers for (volatile acidity, citric acid, sulphates, alcohol);
    # separation is large against unit-ish noise so the group is recoverable.
    centers = {
        0: {"volatile acidity": 0.9, "citric acid": 0.1, "sulphates": 0.4, "alcohol": 9.0},
        1: {"volatile acidity": 0.5, "citric acid": 0.3, "sulphates": 0.6, "alcohol": 10.5},
        2: {"volatile acidity": 0.2, "citric acid": 0.5, "sulphates": 0.9, "alcohol": 12.5},
    }
    base = {
        "fixed acidity": (8.0, 1.0), "residual sugar": (2.5, 0.8),
        "chlorides": (0.08, 0.02), "free sulfur dioxide": (15.0, 6.0),
        "total sulfur dioxide": (45.0, 20.0), "density": (0.996, 0.002),
        "pH": (3.3, 0.15),
    }
    spread = {"volatile acidity": 0.05, "citric acid": 0.05, "sulphates": 0.05, "alcohol": 0.3}
    rows = np.zeros((n_samples, len(WINE_ATTRIBUTES)))
    for j, name in enumerate(WINE_ATTRIBUTES):
        if name in base:
            mu, sd = base[name]
            rows[:, j] = rng.normal(mu, sd, size=n_samples)
        else:
            mu = np.array([centers[g][name] for g in group])
            rows[:, j] = mu + rng.normal(0.0, spread[name], size=n_samples)
    grades_by_group = {0: (2, 3, 4), 1: (5,), 2: (6, 7)}
    quality = np.array(
        [grades_by_group[g][rng.integers(0, len(grades_by_group[g]))] for g in group]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(WINE_ATTRIBUTES) + ["quality"])
        for i in range(n_samples):
            writer.writerow([repr(float(v)) for v in rows[i]] + [str(quality[i])])
    return path
