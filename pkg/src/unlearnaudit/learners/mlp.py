"""One-hidden-layer ReLU network trained with mini-batch momentum SGD."""

from __future__ import annotations

import numpy as np

from .logistic import log_softmax, softmax


def _forward(params, X):
    W1, b1, W2, b2 = params
    H = np.maximum(X @ W1 + b1, 0.0)
    return H, H @ W2 + b2


def full_loss(params, X, y, l2):
    _, Z = _forward(params, X)
    W1, _, W2, _ = params
    ce = -log_softmax(Z)[np.arange(X.shape[0]), y].mean()
    return ce + 0.5 * l2 * (np.sum(W1 * W1) + np.sum(W2 * W2))


def _grads(params, X, y, l2):
    W1, b1, W2, b2 = params
    n = X.shape[0]
    H, Z = _forward(params, X)
    G = softmax(Z)
    G[np.arange(n), y] -= 1.0
    G /= n
    dW2 = H.T @ G + l2 * W2
    dH = (G @ W2.T) * (H > 0)
    dW1 = X.T @ dH + l2 * W1
    return [dW1, dH.sum(axis=0), dW2, G.sum(axis=0)]


def init_params(d, hidden, num_classes, rng):
    # He initialization: N(0, 2 / fan_in)
    return [
        rng.standard_normal((d, hidden)) * np.sqrt(2.0 / d),
        np.zeros(hidden),
        rng.standard_normal((hidden, num_classes)) * np.sqrt(2.0 / hidden),
        np.zeros(num_classes),
    ]


def fit(X, y, num_classes, rng, hidden=128, learning_rate=1e-3, l2=1e-4,
        epochs=200, batch_size=32, momentum=0.9):
    """Train and return ``(params, losses)``.

    An epoch that raises the full-data loss is rolled back and the learning
    rate halved, so ``losses`` is non-increasing.
    """
    n, d = X.shape
    params = init_params(d, hidden, num_classes, rng)
    velocity = [np.zeros_like(p) for p in params]
    loss = full_loss(params, X, y, l2)
    losses = [loss]
    lr = learning_rate
    for _ in range(epochs):
        snapshot = [p.copy() for p in params]
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            grads = _grads(params, X[batch], y[batch], l2)
            for p, v, g in zip(params, velocity, grads):
                v *= momentum
                v -= lr * g
                p += v
        new = full_loss(params, X, y, l2)
        if not np.isfinite(new) or new > loss:
            params = snapshot
            velocity = [np.zeros_like(p) for p in params]
            lr *= 0.5
        else:
            loss = new
        losses.append(loss)
    return params, losses


def predict_proba(params, X):
    return softmax(_forward(params, X)[1])
