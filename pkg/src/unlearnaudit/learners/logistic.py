"""Multinomial logistic regression fit by full-batch gradient descent."""

from __future__ import annotations

import numpy as np


def softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def log_softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    return Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))


def loss_and_grad(W, b, X, y, l2):
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` and its gradient.

    The bias is not penalized. Returns ``(loss, dW, db)``.
    """
    n = X.shape[0]
    Z = X @ W + b
    logp = log_softmax(Z)
    loss = -logp[np.arange(n), y].mean() + 0.5 * l2 * np.sum(W * W)
    G = np.exp(logp)
    G[np.arange(n), y] -= 1.0
    G /= n
    return loss, X.T @ G + l2 * W, G.sum(axis=0)


def fit(X, y, num_classes, l2=1e-3, max_epochs=500, tol=1e-6, step=1.0):
    """Gradient descent with step halving; every accepted step lowers the loss.

    Returns ``(W, b, losses)`` where ``losses`` holds the loss after each
    accepted epoch, starting with the initial loss.
    """
    W = np.zeros((X.shape[1], num_classes))
    b = np.zeros(num_classes)
    loss, dW, db = loss_and_grad(W, b, X, y, l2)
    losses = [loss]
    for _ in range(max_epochs):
        if np.sqrt(np.sum(dW * dW) + np.sum(db * db)) < tol:
            break
        for _ in range(60):
            W_new, b_new = W - step * dW, b - step * db
            new = loss_and_grad(W_new, b_new, X, y, l2)
            if new[0] <= loss:
                break
            step *= 0.5
        else:
            break
        W, b = W_new, b_new
        loss, dW, db = new
        losses.append(loss)
        step *= 1.25
    return W, b, losses


def predict_proba(W, b, X):
    return softmax(X @ W + b)
