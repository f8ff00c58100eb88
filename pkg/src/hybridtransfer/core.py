"""Domain types, CSV I/O, standardization and seed derivation."""

from __future__ import annotations

import csv
import enum
import hashlib
import os
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


class Domain(str, enum.Enum):
    SOURCE = "source"
    TARGET = "target"


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise DataError("sample features must be a finite 1-D vector")
        if self.label not in (0, 1):
            raise DataError(f"label must be 0 or 1, got {self.label!r}")
        x.setflags(write=False)
        object.__setattr__(self, "features", x)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled feature matrix tagged with its domain.

    Arrays are copied and frozen on construction, so a Dataset can be
    shared freely between threads and processes.
    """

    X: np.ndarray
    y: np.ndarray
    domain: Domain = Domain.TARGET
    feature_names: tuple = field(default=())

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        y = np.array(self.y, copy=True)
        if X.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {X.shape}")
        if X.shape[0] < 1:
            raise DataError("dataset must contain at least one sample")
        if y.shape != (X.shape[0],):
            raise DataError("label vector length does not match feature rows")
        if not np.all(np.isfinite(X)):
            raise DataError("feature matrix contains NaN or Inf")
        if not np.all((y == 0) | (y == 1)):
            raise DataError("labels must be 0 or 1")
        y = y.astype(np.int64)
        X.setflags(write=False)
        y.setflags(write=False)
        names = tuple(self.feature_names) or tuple(f"f{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError("feature_names length does not match dimension")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "domain", Domain(self.domain))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def samples(self):
        return [Sample(self.X[i], int(self.y[i])) for i in range(self.n)]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.domain, self.feature_names)

    def with_labels(self, y) -> "Dataset":
        return Dataset(self.X, y, self.domain, self.feature_names)

    def with_domain(self, domain) -> "Dataset":
        return Dataset(self.X, self.y, domain, self.feature_names)


def concat(datasets, domain=Domain.TARGET) -> Dataset:
    """Stack datasets row-wise, in the order given."""
    check_same_dim(*datasets)
    return Dataset(
        np.vstack([ds.X for ds in datasets]),
        np.concatenate([ds.y for ds in datasets]),
        domain,
        datasets[0].feature_names,
    )


def check_same_dim(*datasets):
    dims = {ds.d for ds in datasets}
    if len(dims) != 1:
        raise DataError(f"dimension mismatch across datasets: {sorted(dims)}")


@dataclass(frozen=True)
class Hyperparams:
    alpha: float = 0.9
    l2_reg: float = 1e-2
    weight_clip_max: float = 10.0
    boosting_rounds: int = 200
    learning_rate: float = 0.1
    seed: int = 0
    class_prior: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.l2_reg < 0:
            raise ValueError("l2_reg must be >= 0")
        if self.weight_clip_max < 1:
            raise ValueError("weight_clip_max must be >= 1")
        if int(self.boosting_rounds) != self.boosting_rounds or self.boosting_rounds < 1:
            raise ValueError("boosting_rounds must be a positive integer")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "Hyperparams":
        kw = dict(self.__dict__)
        kw.update(changes)
        return Hyperparams(**kw)


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Schema:
    """Column spec for CSV loading.

    ``label_map`` maps raw label strings to {0, 1}; the default accepts
    ``0``/``1`` (and their float spellings).
    """

    label: str = "label"
    features: tuple | None = None
    label_map: dict | None = None
    domain_column: str = "domain"


_DEFAULT_LABELS = {"0": 0, "1": 1, "0.0": 0, "1.0": 1}


def _read_rows(path):
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"empty file: {path}")
    return rows[0], rows[1:]


def _parse(path, schema: Schema):
    header, body = _read_rows(path)
    if schema.label not in header:
        raise DataError(f"{path}: label column {schema.label!r} not in header")
    if not body:
        raise DataError(f"{path}: no data rows")
    skip = {schema.label, schema.domain_column}
    feats = list(schema.features) if schema.features else [h for h in header if h not in skip]
    missing = [f for f in feats if f not in header]
    if missing:
        raise DataError(f"{path}: feature columns missing from header: {missing}")
    fidx = [header.index(f) for f in feats]
    lidx = header.index(schema.label)
    didx = header.index(schema.domain_column) if schema.domain_column in header else None
    labels = schema.label_map or _DEFAULT_LABELS

    X = np.empty((len(body), len(feats)))
    y = np.empty(len(body), dtype=np.int64)
    dom = []
    for i, row in enumerate(body):
        # row numbers are 1-based and count the header line
        lineno = i + 2
        if len(row) != len(header):
            raise DataError(f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}")
        for k, j in enumerate(fidx):
            try:
                X[i, k] = float(row[j])
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {row[j]!r} at row {lineno}, column {feats[k]}"
                ) from None
        raw = row[lidx].strip()
        if raw not in labels:
            raise DataError(f"{path}: unknown label {raw!r} at row {lineno}")
        y[i] = labels[raw]
        if didx is not None:
            val = row[didx].strip().lower()
            if val not in ("source", "target"):
                raise DataError(f"{path}: unknown domain {row[didx]!r} at row {lineno}")
            dom.append(val)
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        raise DataError(f"{path}: non-finite value at row {bad[0] + 2}, column {feats[bad[1]]}")
    return X, y, dom, tuple(feats)


def load_dataset(path, schema: Schema | None = None, domain=Domain.TARGET) -> Dataset:
    """Load a CSV file into a Dataset, rows in file order.

    If the file carries a ``domain`` column it must hold a single value,
    which then overrides ``domain``; use :func:`load_combined` for mixed
    files.
    """
    schema = schema or Schema()
    X, y, dom, names = _parse(path, schema)
    if dom:
        if len(set(dom)) != 1:
            raise DataError(f"{path}: mixed domain column; use load_combined")
        domain = dom[0]
    return Dataset(X, y, domain, names)


def load_combined(path, schema: Schema | None = None):
    """Split a CSV with a ``domain`` column into (source, target)."""
    schema = schema or Schema()
    X, y, dom, names = _parse(path, schema)
    if not dom:
        raise DataError(f"{path}: no {schema.domain_column!r} column")
    dom = np.array(dom)
    out = []
    for tag in ("source", "target"):
        mask = dom == tag
        if not mask.any():
            raise DataError(f"{path}: no {tag} rows")
        out.append(Dataset(X[mask], y[mask], tag, names))
    return tuple(out)


def write_dataset(ds: Dataset, path, label="label", with_domain=False):
    """Write a Dataset as CSV; floats use repr so reloading is bit-exact."""
    header = list(ds.feature_names) + [label]
    if with_domain:
        header.append("domain")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.X[i]] + [str(int(ds.y[i]))]
            if with_domain:
                row.append(ds.domain.value)
            w.writerow(row)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.scale) <= 0):
            raise ValueError("standardizer scale entries must be > 0")

    @property
    def d(self):
        return self.mean.shape[0]

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.d:
            raise DataError(f"dimension mismatch: standardizer d={self.d}, data d={X.shape[-1]}")
        return (X - self.mean) / self.scale

    def inverse_transform(self, Z):
        Z = np.asarray(Z, dtype=np.float64)
        if Z.shape[-1] != self.d:
            raise DataError(f"dimension mismatch: standardizer d={self.d}, data d={Z.shape[-1]}")
        return Z * self.scale + self.mean


def fit_standardizer(datasets) -> Standardizer:
    """Per-feature mean and population sd over the pooled rows."""
    if isinstance(datasets, Dataset):
        datasets = [datasets]
    if not datasets:
        raise DataError("need at least one dataset")
    check_same_dim(*datasets)
    X = np.vstack([ds.X for ds in datasets])
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    # zero-variance features stay in place (centered) so indices are stable
    scale = np.where(sd > 0, sd, 1.0)
    return Standardizer(mean, scale)


def apply_standardizer(s: Standardizer, ds: Dataset) -> Dataset:
    return Dataset(s.transform(ds.X), ds.y, ds.domain, ds.feature_names)


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------


def derive_seed(seed: int, *path) -> int:
    """Counter-style derivation of a child seed from a root seed and a label path."""
    h = hashlib.sha256(str(int(seed)).encode())
    for p in path:
        h.update(b"/")
        h.update(str(p).encode())
    return int.from_bytes(h.digest()[:8], "little")


def rng_for(seed: int, *path) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *path))
