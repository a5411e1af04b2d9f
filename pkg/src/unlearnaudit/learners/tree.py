"""Gini decision trees stored as flat node arrays.

Two growth regimes share one routine: best-first with a leaf budget (the
stand-alone tree) and unbounded growth with a per-leaf sample floor and
per-node feature subsampling (forest members).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

# relative slack when comparing split scores; equal rationals may differ by an ulp
_TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray      # int64, -1 marks a leaf
    threshold: np.ndarray    # go left when x[feature] <= threshold
    left: np.ndarray
    right: np.ndarray
    proba: np.ndarray        # (n_nodes, num_classes), add-one smoothed
    n_samples: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def leaf_ids(self) -> np.ndarray:
        return np.flatnonzero(self.feature < 0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            r, nd = rows[active], node[active]
            f = self.feature[nd]
            go_left = X[r, f] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.proba[self.apply(X)]


def _sum_sq_over_n(counts: np.ndarray, n) -> np.ndarray:
    return (counts * counts).sum(axis=-1) / n


def best_split(X: np.ndarray, y: np.ndarray, num_classes: int,
               features: np.ndarray | None = None, min_samples_leaf: int = 1):
    """Best Gini split of the rows ``(X, y)`` over the candidate ``features``.

    Returns ``(feature, threshold, decrease)`` where ``decrease`` is the
    sample-weighted impurity drop ``n*G(node) - nL*G(left) - nR*G(right)``,
    or ``None`` when no split separates anything. Ties go to the lowest
    feature index, then the lowest threshold.
    """
    n = X.shape[0]
    if features is None:
        features = np.arange(X.shape[1])
    features = np.asarray(features, dtype=np.int64)
    if n < 2 * min_samples_leaf or features.size == 0:
        return None

    xs = X[:, features]
    order = np.argsort(xs, axis=0, kind="stable")
    xs = np.take_along_axis(xs, order, axis=0)
    onehot = np.eye(num_classes)[y[order]]          # (n, f, C)
    left = np.cumsum(onehot, axis=0)[:-1]            # split after row i
    total = left[-1] + onehot[-1]
    right = total[None, :, :] - left
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left

    valid = xs[:-1] < xs[1:]
    valid &= (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    if not valid.any():
        return None
    score = _sum_sq_over_n(left, n_left) + _sum_sq_over_n(right, n_right)
    score = np.where(valid, score, -np.inf)

    top = score.max()
    parent = float(_sum_sq_over_n(total[0], n))
    decrease = top - parent
    if decrease <= _TIE_TOL * max(1.0, abs(top)):
        return None
    cand_i, cand_f = np.nonzero(score >= top - _TIE_TOL * max(1.0, abs(top)))
    # earliest row within the lowest feature id == lowest threshold
    pick = np.lexsort((cand_i, features[cand_f]))[0]
    i, fj = cand_i[pick], cand_f[pick]
    lo, hi = xs[i, fj], xs[i + 1, fj]
    threshold = lo / 2.0 + hi / 2.0
    if threshold >= hi or threshold < lo:
        threshold = lo
    return int(features[fj]), float(threshold), float(decrease)


class _Builder:
    def __init__(self, num_classes):
        self.num_classes = num_classes
        self.feature, self.threshold = [], []
        self.left, self.right = [], []
        self.proba, self.n_samples = [], []

    def add(self, y):
        counts = np.bincount(y, minlength=self.num_classes).astype(np.float64)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.proba.append((counts + 1.0) / (counts.sum() + self.num_classes))
        self.n_samples.append(y.shape[0])
        return len(self.feature) - 1

    def build(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            proba=np.asarray(self.proba, dtype=np.float64).reshape(-1, self.num_classes),
            n_samples=np.asarray(self.n_samples, dtype=np.int64),
        )


def grow_tree(X: np.ndarray, y: np.ndarray, num_classes: int, *,
              max_leaf_nodes: int | None = None, min_samples_leaf: int = 1,
              max_features: int | None = None,
              rng: np.random.Generator | None = None) -> Tree:
    """Grow a Gini tree, always expanding the leaf with the largest decrease.

    With ``max_features`` set, each node draws a fresh feature permutation
    from ``rng`` and searches the first ``max_features`` features that are
    not constant within the node.
    """
    d = X.shape[1]
    builder = _Builder(num_classes)

    def candidates(rows):
        if max_features is None or max_features >= d:
            return np.arange(d)
        Xn = X[rows]
        varying = Xn.min(axis=0) < Xn.max(axis=0)
        perm = rng.permutation(d)
        return np.sort(perm[varying[perm]][:max_features])

    def propose(node, rows):
        if np.all(y[rows] == y[rows[0]]):
            return
        split = best_split(X[rows], y[rows], num_classes, candidates(rows),
                           min_samples_leaf)
        if split is not None:
            heapq.heappush(heap, (-split[2], node, rows, split))

    heap: list = []
    root_rows = np.arange(X.shape[0])
    propose(builder.add(y), root_rows)
    n_leaves = 1
    budget = max_leaf_nodes if max_leaf_nodes is not None else np.inf
    while heap and n_leaves < budget:
        _, node, rows, (f, thr, _) = heapq.heappop(heap)
        go_left = X[rows, f] <= thr
        lrows, rrows = rows[go_left], rows[~go_left]
        lnode, rnode = builder.add(y[lrows]), builder.add(y[rrows])
        builder.feature[node], builder.threshold[node] = f, thr
        builder.left[node], builder.right[node] = lnode, rnode
        n_leaves += 1
        propose(lnode, lrows)
        propose(rnode, rrows)
    return builder.build()
