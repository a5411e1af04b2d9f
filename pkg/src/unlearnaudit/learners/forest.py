"""Bagged Gini trees with per-split feature subsampling."""

from __future__ import annotations

import math

import numpy as np

from .tree import Tree, grow_tree


def fit(X, y, num_classes, seed, n_estimators=100, min_samples_leaf=30):
    """Tree ``t`` bootstraps and subsamples with generator ``seed + t``."""
    n, d = X.shape
    max_features = max(1, math.ceil(math.sqrt(d)))
    trees = []
    for t in range(n_estimators):
        rng = np.random.default_rng(seed + t)
        boot = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[boot], y[boot], num_classes,
                               min_samples_leaf=min_samples_leaf,
                               max_features=max_features, rng=rng))
    return tuple(trees)


def predict_proba(trees: tuple[Tree, ...], X):
    out = trees[0].predict_proba(X).copy()
    for tree in trees[1:]:
        out += tree.predict_proba(X)
    return out / len(trees)
