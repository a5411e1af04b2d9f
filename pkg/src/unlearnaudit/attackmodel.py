"""The two-posterior attack classifier and the single-posterior baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attackfeat import NO_DEFENSE, Defense, FeatureMethod, construct_batch
from .data import SubsetHandle
from .errors import DataError
from .learners import HyperParams, TrainedClassifier, fit_arrays
from .shadowfarm import CasePair, Farm, case_arrays

MEMBER = 1  # class index of "positive" / "member" in both binary classifiers


@dataclass(frozen=True, eq=False)
class AttackClassifier:
    inner: TrainedClassifier
    method: FeatureMethod
    defense: Defense
    num_classes: int

    def features(self, Po, Pu) -> np.ndarray:
        Po = self.defense.apply(Po)
        Pu = self.defense.apply(Pu)
        return construct_batch(self.method, Po, Pu)


@dataclass(frozen=True, eq=False)
class BaselineClassifier:
    inner: TrainedClassifier
    defense: Defense
    num_classes: int

    def features(self, Po) -> np.ndarray:
        return sorted_posterior(self.defense.apply(Po))


def sorted_posterior(P) -> np.ndarray:
    return -np.sort(-np.atleast_2d(P), axis=1)


def _check_posteriors(P, num_classes):
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    if P.shape[1] != num_classes:
        raise DataError(f"expected posteriors over {num_classes} classes, got {P.shape[1]}")
    return P


def _check_balanced(labels: np.ndarray):
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        raise DataError("attack training needs both positive and negative cases")
    if pos != neg:
        raise DataError(f"unbalanced attack training set: {pos} positive vs {neg} negative")


def train_attack(cases: list[CasePair], method, defense: Defense = NO_DEFENSE, kind="RF",
                 params: HyperParams | None = None, seed: int = 0) -> AttackClassifier:
    """Fit the binary member/non-member classifier on balanced shadow cases."""
    method = FeatureMethod.parse(method)
    Po, Pu, b = case_arrays(cases)
    _check_balanced(b)
    ell = Po.shape[1]
    shell = AttackClassifier(None, method, defense, ell)
    inner = fit_arrays(kind, params or HyperParams(), shell.features(Po, Pu),
                       b.astype(np.int64), 2, seed)
    return AttackClassifier(inner, method, defense, ell)


def infer_batch(attack: AttackClassifier, Po, Pu) -> np.ndarray:
    Po = _check_posteriors(Po, attack.num_classes)
    Pu = _check_posteriors(Pu, attack.num_classes)
    return attack.inner.predict_proba(attack.features(Po, Pu))[:, MEMBER]


def infer(attack: AttackClassifier, po, pu) -> float:
    """Confidence that the queried sample was in the original's training set."""
    return float(infer_batch(attack, po, pu)[0])


def baseline_training_set(farm: Farm, negative_pool: SubsetHandle, seed: int,
                          max_members: int | None = None):
    """Original-model posteriors of members and of as many non-members.

    Returns ``(P, is_member)``. Members are every original's own training
    samples (optionally subsampled to ``max_members``); non-members are
    uniform (negative sample, original) draws.
    """
    if len(negative_pool) == 0:
        raise DataError("empty negative pool")
    pool_set = negative_pool.index_set()
    if any(e.train_set.index_set() & pool_set for e in farm.originals):
        raise DataError("negative pool overlaps an original's training set")
    rng = np.random.default_rng(seed)
    ds = negative_pool.parent
    owners = np.concatenate([np.full(len(e.train_set), i)
                             for i, e in enumerate(farm.originals)])
    samples = np.concatenate([np.sort(e.train_set.indices) for e in farm.originals])
    if max_members is not None and max_members < samples.size:
        keep = np.sort(rng.choice(samples.size, size=max_members, replace=False))
        owners, samples = owners[keep], samples[keep]
    n = samples.size
    neg_samples = rng.choice(negative_pool.indices, size=n, replace=True)
    neg_owners = rng.integers(0, len(farm.originals), size=n)

    P = np.empty((2 * n, farm.num_classes))
    for half, (own, smp) in enumerate(((owners, samples), (neg_owners, neg_samples))):
        for i in np.unique(own):
            rows = np.flatnonzero(own == i)
            P[half * n + rows] = farm.originals[i].model.predict_proba(ds.features[smp[rows]])
    is_member = np.r_[np.ones(n, dtype=bool), np.zeros(n, dtype=bool)]
    return P, is_member


def train_baseline(farm: Farm, negative_pool: SubsetHandle, kind="RF",
                   params: HyperParams | None = None, seed: int = 0,
                   defense: Defense = NO_DEFENSE,
                   max_members: int | None = None) -> BaselineClassifier:
    """Classical membership inference on the original model's sorted posterior."""
    P, is_member = baseline_training_set(farm, negative_pool, seed, max_members)
    return fit_baseline(P, is_member, kind, params, seed, defense)


def fit_baseline(P, is_member, kind="RF", params: HyperParams | None = None,
                 seed: int = 0, defense: Defense = NO_DEFENSE) -> BaselineClassifier:
    is_member = np.asarray(is_member, dtype=bool)
    _check_balanced(is_member)
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    shell = BaselineClassifier(None, defense, P.shape[1])
    inner = fit_arrays(kind, params or HyperParams(), shell.features(P),
                       is_member.astype(np.int64), 2, seed)
    return BaselineClassifier(inner, defense, P.shape[1])


def infer_baseline_batch(baseline: BaselineClassifier, Po) -> np.ndarray:
    Po = _check_posteriors(Po, baseline.num_classes)
    return baseline.inner.predict_proba(baseline.features(Po))[:, MEMBER]


def infer_baseline(baseline: BaselineClassifier, po) -> float:
    return float(infer_baseline_batch(baseline, po)[0])
