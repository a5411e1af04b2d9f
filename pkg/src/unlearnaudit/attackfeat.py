"""Feature construction from an (original, unlearned) posterior pair.

Also holds the two output-restriction defenses and the adversary's
reconstruction of a full posterior from what they publish.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


class FeatureMethod(str, enum.Enum):
    DirectConcat = "DirectConcat"
    SortedConcat = "SortedConcat"
    DirectDiff = "DirectDiff"
    SortedDiff = "SortedDiff"
    EucDist = "EucDist"

    @classmethod
    def parse(cls, value) -> "FeatureMethod":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(f"unknown feature method {value!r}") from None

    def feature_dim(self, num_classes: int) -> int:
        if self in (FeatureMethod.DirectConcat, FeatureMethod.SortedConcat):
            return 2 * num_classes
        if self is FeatureMethod.EucDist:
            return 1
        return num_classes


def _sorted_pair(Po, Pu):
    # stable descending sort: ties keep their original class order
    order = np.argsort(-Po, axis=-1, kind="stable")
    return np.take_along_axis(Po, order, -1), np.take_along_axis(Pu, order, -1)


def construct_batch(method, Po, Pu) -> np.ndarray:
    """Row-wise :func:`construct` over ``(n, num_classes)`` posterior matrices."""
    method = FeatureMethod.parse(method)
    Po = np.atleast_2d(np.asarray(Po, dtype=np.float64))
    Pu = np.atleast_2d(np.asarray(Pu, dtype=np.float64))
    if Po.shape != Pu.shape:
        raise ValueError(f"posterior shapes differ: {Po.shape} vs {Pu.shape}")
    if Po.shape[-1] < 2:
        raise ValueError("posteriors need at least two classes")
    if method is FeatureMethod.DirectConcat:
        return np.concatenate([Po, Pu], axis=1)
    if method is FeatureMethod.DirectDiff:
        return Po - Pu
    if method is FeatureMethod.EucDist:
        return np.sqrt(np.sum((Po - Pu) ** 2, axis=1, keepdims=True))
    So, Su = _sorted_pair(Po, Pu)
    if method is FeatureMethod.SortedConcat:
        return np.concatenate([So, Su], axis=1)
    return So - Su


def construct(method, po, pu) -> np.ndarray:
    return construct_batch(method, po, pu)[0]


def pseudo_posterior_topk(published, num_classes: int) -> np.ndarray:
    """Spread what the top-k pairs leave over the unpublished classes."""
    k = len(published)
    if not 1 <= k < num_classes:
        raise ValueError(f"top-k needs 1 <= k < {num_classes}, got {k}")
    classes = [int(c) for c, _ in published]
    conf = np.array([float(p) for _, p in published])
    if len(set(classes)) != k or min(classes) < 0 or max(classes) >= num_classes:
        raise ValueError("published classes must be distinct and in range")
    if np.any(conf < 0) or np.any(conf > 1) or np.any(np.diff(conf) > 0):
        raise ValueError("published confidences must be non-increasing values in [0, 1]")
    total = conf.sum()
    if total > 1 + 1e-6:
        raise ValueError(f"published confidences sum to {total} > 1")
    out = np.full(num_classes, max(0.0, 1.0 - total) / (num_classes - k))
    out[classes] = conf
    return out


def pseudo_posterior_label(label: int, num_classes: int) -> np.ndarray:
    if not 0 <= label < num_classes:
        raise ValueError(f"label {label} outside [0, {num_classes})")
    out = np.zeros(num_classes)
    out[label] = 1.0
    return out


@dataclass(frozen=True)
class Defense:
    """What the model owner publishes: everything, the top ``k`` or the label."""

    kind: str = "none"
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "topk", "label"):
            raise ConfigError(f"unknown defense {self.kind!r}")
        if self.kind == "topk" and self.k < 1:
            raise ConfigError("top-k defense needs k >= 1")

    def label(self) -> str:
        return {"none": "None", "label": "LabelOnly"}.get(self.kind, f"TopK({self.k})")

    def publish(self, p):
        """Owner side: the restricted output for one posterior."""
        p = np.asarray(p)
        if self.kind == "none":
            return p
        if self.kind == "label":
            return int(np.argmax(p))
        order = np.argsort(-p, kind="stable")[: self.k]
        return [(int(c), float(p[c])) for c in order]

    def reconstruct(self, published, num_classes: int) -> np.ndarray:
        """Adversary side: a full-length posterior from the published output."""
        if self.kind == "none":
            return np.asarray(published, dtype=np.float64)
        if self.kind == "label":
            return pseudo_posterior_label(published, num_classes)
        return pseudo_posterior_topk(published, num_classes)

    def apply(self, P) -> np.ndarray:
        """Publish then reconstruct every row of ``P``."""
        P = np.atleast_2d(np.asarray(P, dtype=np.float64))
        if self.kind == "none":
            return P
        ell = P.shape[1]
        if self.kind == "topk" and self.k >= ell:
            return P
        return np.stack([self.reconstruct(self.publish(p), ell) for p in P])


NO_DEFENSE = Defense()
