"""Dataset container, CSV ingestion, z-score normalization, deterministic
splits, and synthetic generators used throughout the package and its tests."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(eq=False)
class Dataset:
    """A feature matrix with integer class labels.

    features: (n, m) float matrix, one row per example
    labels: (n,) integers in [0, class_count)
    feature_names: one unique name per column
    class_count: number of classes, at least 2
    label_names: original label text per class index (defaults to "0", "1", ...)
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    class_count: int
    label_names: tuple | None = None

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=int)
        self.feature_names = tuple(str(s) for s in self.feature_names)
        if self.features.shape[0] != self.labels.shape[0]:
            raise DataError("row count of features must equal length of labels")
        if self.features.shape[1] < 1:
            raise DataError("need at least one feature column")
        if len(self.feature_names) != self.features.shape[1]:
            raise DataError("one feature name required per column")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DataError("feature names must be unique")
        if self.class_count < 2:
            raise DataError("fewer than 2 classes")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise DataError("labels must lie in [0, class_count)")
        if self.label_names is None:
            self.label_names = tuple(str(k) for k in range(self.class_count))
        else:
            self.label_names = tuple(str(s) for s in self.label_names)
            if len(self.label_names) != self.class_count:
                raise DataError("one label name required per class")

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def take(self, indices):
        """Row subset sharing names and class metadata."""
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.features[idx], self.labels[idx], self.feature_names,
                       self.class_count, self.label_names)


@dataclass(eq=False)
class NormParams:
    """Per-column mean and population standard deviation.

    Columns with zero variance keep the sentinel sd 1 so the transform is
    mean-centering only; those columns carry no information anyway.
    """

    mean: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.sd = np.asarray(self.sd, dtype=float)
        if self.mean.shape != self.sd.shape:
            raise DataError("mean and sd must have one entry per column")
        if np.any(self.sd <= 0):
            raise DataError("standard deviations must be positive (sentinel 1 for constant columns)")

    def apply(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.sd

    def apply_dataset(self, ds: Dataset) -> Dataset:
        return Dataset(self.apply(ds.features), ds.labels, ds.feature_names,
                       ds.class_count, ds.label_names)


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic split request: positive fractions summing to 1."""

    fractions: tuple
    seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        if any(f <= 0 for f in self.fractions):
            raise DataError("every split fraction must be positive")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise DataError("split fractions must sum to 1")


def load_csv(path, label_column, label_order=None):
    """Read a comma-separated file with a header row into a Dataset.

    Labels are mapped to 0..r-1 in first-appearance order, unless
    `label_order` pins an existing mapping (used when evaluating against a
    stored model); an unknown label is then an error.
    """
    p = Path(path)
    if not p.exists():
        raise DataError(f"missing file: {path}")
    with open(p, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file, no header row")
    header = [h.strip() for h in rows[0]]
    if label_column not in header:
        raise DataError(f"{path}: label column '{label_column}' not found in header")
    li = header.index(label_column)
    names = [h for i, h in enumerate(header) if i != li]
    if not names:
        raise DataError(f"{path}: no feature columns besides the label")

    feats, raw_labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} cells, got {len(row)}")
        vals = []
        for i, cell in enumerate(row):
            if i == li:
                raw_labels.append(cell.strip())
                continue
            try:
                value = float(cell)
                if not np.isfinite(value):
                    raise ValueError
                vals.append(value)
            except ValueError:
                raise DataError(
                    f"{path}: line {lineno}, column '{header[i]}': non-numeric value '{cell.strip()}'"
                ) from None
        feats.append(vals)
    if not feats:
        raise DataError(f"{path}: no data rows")

    if label_order is None:
        order, index = [], {}
        for s in raw_labels:
            if s not in index:
                index[s] = len(order)
                order.append(s)
        if len(order) < 2:
            raise DataError(f"{path}: fewer than 2 classes in column '{label_column}'")
    else:
        order = [str(s) for s in label_order]
        index = {s: k for k, s in enumerate(order)}
        for s in raw_labels:
            if s not in index:
                raise DataError(f"{path}: label '{s}' not present in the stored label mapping")

    labels = np.array([index[s] for s in raw_labels], dtype=int)
    return Dataset(np.array(feats, dtype=float), labels, tuple(names), len(order), tuple(order))


def save_csv(ds: Dataset, path, label_column="y"):
    """Write a Dataset back to CSV; labels are emitted as their label names."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(ds.feature_names) + [label_column])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [ds.label_names[lab]])


def normalize_zscore(ds: Dataset):
    """Center every column and scale non-constant ones to unit variance.

    Returns the transformed dataset and the NormParams needed to apply the
    same transform to unseen data. Uses the population (divide-by-n)
    standard deviation.
    """
    if ds.n_rows < 2:
        raise DataError("normalization needs at least 2 rows")
    mean = ds.features.mean(axis=0)
    sd = ds.features.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    params = NormParams(mean, sd)
    return params.apply_dataset(ds), params


def split(ds: Dataset, spec: SplitSpec):
    """Partition rows into len(fractions) disjoint datasets.

    Sizes are floor(n * fraction) with the remainder assigned to the first
    part. With stratified=True the same rule is applied class by class, so
    per-class proportions stay within one row of the request.
    """
    rng = np.random.default_rng(spec.seed)
    parts = [[] for _ in spec.fractions]

    def carve(indices):
        perm = rng.permutation(indices)
        sizes = [int(np.floor(len(indices) * f + 1e-9)) for f in spec.fractions]
        sizes[0] += len(indices) - sum(sizes)
        ofs = 0
        for pi, s in enumerate(sizes):
            parts[pi].extend(int(i) for i in perm[ofs:ofs + s])
            ofs += s

    if spec.stratified:
        for c in range(ds.class_count):
            carve(np.flatnonzero(ds.labels == c))
    else:
        carve(np.arange(ds.n_rows))

    if any(len(p) == 0 for p in parts):
        raise DataError("split would produce an empty part")
    return [ds.take(np.sort(np.array(p, dtype=int))) for p in parts]


def xor_label(x1, x2):
    """Continuous-XOR target: 1 when the coordinate product is positive."""
    return 1 if x1 * x2 > 0 else 0


def gen_xor(n, seed):
    """Continuous XOR: x1, x2 uniform on [-1, 1], label 1 iff x1*x2 > 0."""
    if n < 4:
        raise DataError("need at least 4 rows")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, 2))
    y = (X[:, 0] * X[:, 1] > 0).astype(int)
    return Dataset(X, y, ("x1", "x2"), 2)


def gen_blobs(n, classes=3, seed=0, spread=1.0, radius=3.0):
    """Gaussian blobs in the plane, one centered per class on a circle.

    Class sizes are balanced (round-robin assignment, then shuffled).
    Small `spread` relative to `radius` gives linearly separable classes;
    spread around half the inter-center distance gives mild overlap.
    """
    if classes < 2:
        raise DataError("need at least 2 classes")
    if n < classes:
        raise DataError("need at least one row per class")
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(n) % classes)
    angles = 2.0 * np.pi * labels / classes
    centers = np.column_stack([radius * np.cos(angles), radius * np.sin(angles)])
    X = centers + rng.normal(0.0, spread, size=(n, 2))
    return Dataset(X, labels, ("x1", "x2"), classes)


def gen_surrogate_eeg(n, relevant=4, irrelevant=68, classes=2, seed=0, separation=2.0):
    """High-dimensional synthetic data with a few informative columns.

    The informative columns get a class-conditional mean shift of
    separation * (label / (classes - 1) - 1/2); all other columns are pure
    standard-normal noise. Informative column positions are shuffled.

    Returns (dataset, informative_columns) so feature-selection tests have
    ground truth.
    """
    if relevant < 1:
        raise DataError("need at least 1 informative column")
    if classes < 2:
        raise DataError("need at least 2 classes")
    m = relevant + irrelevant
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, classes, size=n)
    X = rng.standard_normal((n, m))
    informative = np.sort(rng.permutation(m)[:relevant])
    shift = separation * (labels / (classes - 1) - 0.5)
    for c in informative:
        X[:, c] += shift
    names = tuple(f"f{j + 1}" for j in range(m))
    ds = Dataset(X, labels, names, classes)
    return ds, tuple(int(c) for c in informative)
