"""Independent reference implementations used only by the tests."""

from fractions import Fraction
from itertools import product

import numpy as np


def brute_force_best_split(X, y, num_classes):
    """Exhaustive Gini split search in exact rational arithmetic.

    Returns ``(feature, threshold)`` or ``None`` when no split lowers impurity.
    """
    n = len(y)

    def weighted_gini(rows):
        m = len(rows)
        if m == 0:
            return Fraction(0)
        counts = [sum(1 for r in rows if y[r] == c) for c in range(num_classes)]
        return m - sum(Fraction(c * c, m) for c in counts)   # m * G

    everyone = list(range(n))
    parent = weighted_gini(everyone)
    best = None
    for j in range(X.shape[1]):
        values = sorted(set(Fraction(v) for v in X[:, j]))
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2
            left = [r for r in everyone if Fraction(X[r, j]) <= thr]
            right = [r for r in everyone if Fraction(X[r, j]) > thr]
            dec = parent - weighted_gini(left) - weighted_gini(right)
            key = (-dec, j, thr)
            if dec > 0 and (best is None or key < best):
                best = key
    if best is None:
        return None
    return best[1], float(best[2])


def perceptron_separable(X, y, epochs=10_000):
    """Classic perceptron; returns True once it makes a mistake-free pass."""
    Xb = np.hstack([X, np.ones((len(X), 1))])
    s = np.where(y == 1, 1.0, -1.0)
    w = np.zeros(Xb.shape[1])
    for _ in range(epochs):
        mistakes = 0
        for xi, si in zip(Xb, s):
            if si * (xi @ w) <= 0:
                w += si * xi
                mistakes += 1
        if mistakes == 0:
            return True
    return False


def central_difference(f, params, eps=1e-6):
    """Numerical gradient of scalar ``f()`` w.r.t. each array in ``params`` (in place)."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            up = f()
            p[idx] = old - eps
            down = f()
            p[idx] = old
            g[idx] = (up - down) / (2 * eps)
        grads.append(g)
    return grads


def brute_force_auc(scores, labels):
    """Pair enumeration: a positive beating a negative scores 1, a tie 1/2."""
    pos = [s for s, b in zip(scores, labels) if b]
    neg = [s for s, b in zip(scores, labels) if not b]
    total = Fraction(0)
    for p, q in product(pos, neg):
        total += 1 if p > q else Fraction(1, 2) if p == q else 0
    return total / (len(pos) * len(neg))
