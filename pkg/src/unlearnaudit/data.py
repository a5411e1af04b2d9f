"""Tabular ingestion, numeric encoding and seeded index splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class RawTable:
    header: list[str]
    rows: list[list[str]]

    def __post_init__(self):
        width = len(self.header)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise DataError(f"row {i} has {len(row)} cells, header has {width}")

    def column(self, name: str) -> list[str]:
        j = self.header.index(name)
        return [row[j] for row in self.rows]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class EncodedDataset:
    """Numeric feature matrix with dense integer labels ``0..num_classes-1``."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    feature_names: list[str] = field(default_factory=list)
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        X = _frozen(np.asarray(self.features, dtype=np.float64))
        y = _frozen(np.asarray(self.labels, dtype=np.int64))
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DataError(f"features {X.shape} and labels {y.shape} disagree")
        if self.num_classes < 2:
            raise DataError("an encoded dataset needs at least two classes")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise DataError("labels out of range")
        if not np.all(np.isfinite(X)):
            raise DataError("non-finite feature value")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.labels.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def full(self) -> "SubsetHandle":
        return SubsetHandle(self, np.arange(len(self)))


@dataclass(frozen=True, eq=False)
class SubsetHandle:
    """A set of distinct row indices into an :class:`EncodedDataset`."""

    parent: EncodedDataset
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        if idx.size:
            if idx.min() < 0 or idx.max() >= len(self.parent):
                raise DataError("subset index out of range")
            if np.unique(idx).size != idx.size:
                raise DataError("subset indices must be distinct")
        object.__setattr__(self, "indices", _frozen(idx))

    def __len__(self):
        return self.indices.shape[0]

    @property
    def features(self) -> np.ndarray:
        return self.parent.features[self.indices]

    @property
    def labels(self) -> np.ndarray:
        return self.parent.labels[self.indices]

    def index_set(self) -> frozenset[int]:
        return frozenset(self.indices.tolist())

    def without(self, removed: Iterable[int]) -> "SubsetHandle":
        removed = np.asarray(list(removed), dtype=np.int64)
        keep = ~np.isin(self.indices, removed)
        return SubsetHandle(self.parent, self.indices[keep])


def load_csv(path, label_column: str, categorical_columns: Iterable[str] = (),
             drop_columns: Iterable[str] = ()) -> RawTable:
    """Parse a comma-separated file with a header row.

    Rows holding an empty cell are dropped; no encoding is done here.
    ``drop_columns`` are removed after parsing.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        width = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DataError(f"{path}:{lineno}: expected {width} cells, got {len(row)}")
            row = [c.strip() for c in row]
            if any(c == "" for c in row):
                continue
            rows.append(row)
    missing = [c for c in [label_column, *categorical_columns] if c not in header]
    if missing:
        raise DataError(f"columns not in header: {missing}")
    drop = set(drop_columns) - {label_column}
    if drop:
        keep = [j for j, h in enumerate(header) if h not in drop]
        header = [header[j] for j in keep]
        rows = [[row[j] for j in keep] for row in rows]
    return RawTable(header, rows)


def _minmax(col: np.ndarray) -> np.ndarray:
    lo, hi = col.min(), col.max()
    if hi == lo:
        return np.zeros_like(col)
    return (col - lo) / (hi - lo)


def encode(raw: RawTable, label_column: str,
           categorical_columns: Iterable[str] = ()) -> EncodedDataset:
    """One-hot categorical columns, min-max scale numeric ones, densify labels."""
    if label_column not in raw.header:
        raise DataError(f"label column {label_column!r} absent")
    categorical = set(categorical_columns)

    class_names: list[str] = []
    lookup: dict[str, int] = {}
    labels = []
    for value in raw.column(label_column):
        if value not in lookup:
            lookup[value] = len(class_names)
            class_names.append(value)
        labels.append(lookup[value])
    if len(class_names) < 2:
        raise DataError("label column holds a single class")
    counts = np.bincount(labels, minlength=len(class_names))
    if counts.min() < 2:
        rare = class_names[int(counts.argmin())]
        raise DataError(f"label {rare!r} occurs fewer than two times")

    blocks, names = [], []
    for name in raw.header:
        if name == label_column:
            continue
        values = raw.column(name)
        if name in categorical:
            levels = sorted(set(values))
            pos = {v: i for i, v in enumerate(levels)}
            block = np.zeros((len(values), len(levels)))
            block[np.arange(len(values)), [pos[v] for v in values]] = 1.0
            blocks.append(block)
            names.extend(f"{name}={v}" for v in levels)
        else:
            try:
                col = np.array([float(v) for v in values])
            except ValueError as exc:
                raise DataError(f"non-numeric cell in column {name!r}: {exc}") from None
            if col.size and not np.all(np.isfinite(col)):
                raise DataError(f"non-finite value in column {name!r}")
            blocks.append((_minmax(col) if col.size else col)[:, None])
            names.append(name)
    n = len(raw.rows)
    X = np.hstack(blocks) if blocks else np.zeros((n, 0))
    if X.shape[1] == 0:
        raise DataError("no feature columns left after encoding")
    return EncodedDataset(X, np.asarray(labels, dtype=np.int64), len(class_names),
                          names, class_names)


def _largest_remainder(n: int, fractions: Sequence[float]) -> list[int]:
    quotas = [n * f for f in fractions]
    sizes = [math.floor(q) for q in quotas]
    short = n - sum(sizes)
    # stable sort keeps fraction order on equal remainders
    order = sorted(range(len(fractions)), key=lambda i: -(quotas[i] - sizes[i]))
    for i in order[:short]:
        sizes[i] += 1
    return sizes


def split_disjoint(ds: EncodedDataset | SubsetHandle, fractions: Sequence[float],
                   seed: int) -> list[SubsetHandle]:
    """Seeded partition of ``ds`` into disjoint handles sized by ``fractions``.

    A :class:`SubsetHandle` may be passed to split a previous split further.
    """
    handle = ds if isinstance(ds, SubsetHandle) else ds.full()
    if len(handle) == 0:
        raise DataError("cannot split an empty dataset")
    if not fractions or any(f <= 0 for f in fractions):
        raise DataError("fractions must be positive")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError(f"fractions sum to {sum(fractions)}, not 1")
    rng = np.random.default_rng(seed)
    perm = handle.indices[rng.permutation(len(handle))]
    out, start = [], 0
    for size in _largest_remainder(len(handle), fractions):
        out.append(SubsetHandle(handle.parent, perm[start:start + size]))
        start += size
    return out


def sample_subsets(pool: SubsetHandle, count: int, size: int,
                   seed: int) -> list[SubsetHandle]:
    """Draw ``count`` independent without-replacement subsets of ``size``."""
    if count < 1 or size < 1:
        raise DataError("count and size must be positive")
    if size > len(pool):
        raise DataError(f"subset size {size} exceeds pool of {len(pool)}")
    rng = np.random.default_rng(seed)
    return [SubsetHandle(pool.parent, rng.choice(pool.indices, size=size, replace=False))
            for _ in range(count)]


def save_prepared(path, ds: EncodedDataset, splits: dict[str, SubsetHandle]) -> None:
    """Persist an encoded dataset and named splits as one ``.npz`` archive."""
    arrays = {f"split_{k}": v.indices for k, v in splits.items()}
    np.savez_compressed(
        path, features=ds.features, labels=ds.labels,
        num_classes=np.int64(ds.num_classes),
        feature_names=np.array(ds.feature_names, dtype=str),
        class_names=np.array(ds.class_names, dtype=str), **arrays)


def load_prepared(path) -> tuple[EncodedDataset, dict[str, SubsetHandle]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with np.load(path) as z:
        ds = EncodedDataset(z["features"], z["labels"], int(z["num_classes"]),
                            z["feature_names"].tolist(), z["class_names"].tolist())
        splits = {k[len("split_"):]: SubsetHandle(ds, z[k])
                  for k in z.files if k.startswith("split_")}
    return ds, splits
