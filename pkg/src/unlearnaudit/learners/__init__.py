"""The four classifiers used as target, shadow and attack models."""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields
from typing import Any

import numpy as np

from ..data import SubsetHandle
from ..errors import ConfigError, DataError, DegenerateTrainingSetError
from . import forest, logistic, mlp
from .tree import Tree, grow_tree


class ModelKind(str, enum.Enum):
    LR = "LR"
    DT = "DT"
    RF = "RF"
    MLP = "MLP"

    @classmethod
    def parse(cls, value) -> "ModelKind":
        aliases = {
            "logisticregression": cls.LR, "decisiontree": cls.DT,
            "randomforest": cls.RF, "multilayerperceptron": cls.MLP,
        }
        if isinstance(value, cls):
            return value
        text = str(value)
        if text.upper() in cls.__members__:
            return cls[text.upper()]
        try:
            return aliases[text.replace("_", "").replace(" ", "").lower()]
        except KeyError:
            raise ConfigError(f"unknown model kind {value!r}") from None


@dataclass(frozen=True)
class HyperParams:
    lr_l2: float = 1e-3
    lr_epochs: int = 500
    dt_max_leaf_nodes: int = 10
    rf_n_estimators: int = 100
    rf_min_samples_leaf: int = 30
    mlp_hidden: int = 128
    mlp_learning_rate: float = 0.001
    mlp_l2: float = 0.0001
    mlp_epochs: int = 200
    mlp_batch_size: int = 32
    mlp_momentum: float = 0.9

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("lr_l2", "mlp_l2", "mlp_momentum"):
                if v < 0:
                    raise ConfigError(f"{f.name} must be non-negative")
            elif v <= 0:
                raise ConfigError(f"{f.name} must be positive")


@dataclass(frozen=True, eq=False)
class TrainedClassifier:
    kind: ModelKind
    num_classes: int
    feature_dim: int
    parameters: Any
    train_seed: int

    def predict_proba(self, x) -> np.ndarray:
        """Posterior for one feature vector, or one row per input row."""
        X = np.asarray(x, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.ndim != 2 or X.shape[1] != self.feature_dim:
            raise DataError(f"expected {self.feature_dim} features, got shape {np.shape(x)}")
        p = self.parameters
        if self.kind is ModelKind.LR:
            P = logistic.predict_proba(p[0], p[1], X)
        elif self.kind is ModelKind.DT:
            P = p.predict_proba(X)
        elif self.kind is ModelKind.RF:
            P = forest.predict_proba(p, X)
        else:
            P = mlp.predict_proba(p, X)
        return P[0] if single else P


def fit_arrays(kind, params: HyperParams, X, y, num_classes: int,
               seed: int) -> TrainedClassifier:
    """Train on explicit arrays; rows are used in the order given."""
    kind = ModelKind.parse(kind)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise DegenerateTrainingSetError("empty training set")
    if np.unique(y).size < 2:
        raise DegenerateTrainingSetError("training set holds a single class")
    if kind is ModelKind.LR:
        W, b, _ = logistic.fit(X, y, num_classes, l2=params.lr_l2,
                               max_epochs=params.lr_epochs)
        parameters = (W, b)
    elif kind is ModelKind.DT:
        parameters = grow_tree(X, y, num_classes,
                               max_leaf_nodes=params.dt_max_leaf_nodes)
    elif kind is ModelKind.RF:
        parameters = forest.fit(X, y, num_classes, seed,
                                n_estimators=params.rf_n_estimators,
                                min_samples_leaf=params.rf_min_samples_leaf)
    else:
        parameters, _ = mlp.fit(
            X, y, num_classes, np.random.default_rng(seed),
            hidden=params.mlp_hidden, learning_rate=params.mlp_learning_rate,
            l2=params.mlp_l2, epochs=params.mlp_epochs,
            batch_size=params.mlp_batch_size, momentum=params.mlp_momentum)
        parameters = tuple(parameters)
    return TrainedClassifier(kind, num_classes, X.shape[1], parameters, int(seed))


def train(kind, params: HyperParams, train_set: SubsetHandle, seed: int) -> TrainedClassifier:
    """Fit ``kind`` on ``train_set``.

    Rows are visited in ascending index order, so the result depends only
    on the set of indices and the seed.
    """
    idx = np.sort(train_set.indices)
    ds = train_set.parent
    return fit_arrays(kind, params, ds.features[idx], ds.labels[idx],
                      ds.num_classes, seed)


def predict_proba(model, x) -> np.ndarray:
    return model.predict_proba(x)


def predict_label(model, x) -> np.ndarray:
    # argmax returns the first maximum, i.e. the lowest class index on ties
    return np.argmax(np.atleast_2d(model.predict_proba(x)), axis=1)


def accuracy(model, ds: SubsetHandle) -> float:
    if len(ds) == 0:
        raise DataError("accuracy of an empty set")
    return float(np.mean(predict_label(model, ds.features) == ds.labels))


def overfitting_level(model, train_ds: SubsetHandle, test_ds: SubsetHandle) -> float:
    """Train accuracy minus test accuracy."""
    return accuracy(model, train_ds) - accuracy(model, test_ds)


from .codec import deserialize, serialize  # noqa: E402

__all__ = [
    "ModelKind", "HyperParams", "TrainedClassifier", "Tree",
    "train", "fit_arrays", "predict_proba", "predict_label",
    "accuracy", "overfitting_level", "serialize", "deserialize",
]
