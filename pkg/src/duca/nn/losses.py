"""Scalar losses with analytic gradients wrt their first argument."""

import numpy as np

from ..errors import DataError, StructuralError


def cross_entropy(logits, labels):
    """Mean cross-entropy over the batch.

    Returns ``(loss, dlogits)``. Labels outside ``[0, K)`` raise DataError.
    """
    n, k = logits.shape
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= k:
        raise DataError(
            f"label out of range: got [{labels.min()}, {labels.max()}] for {k} classes"
        )
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    denom = exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(denom)
    loss = -float(log_probs[np.arange(n), labels].mean())
    grad = exp / denom
    grad[np.arange(n), labels] -= 1
    grad /= n
    return loss, grad.astype(logits.dtype, copy=False)


def softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def mse(a, b):
    """Mean squared error over all elements.

    Returns ``(loss, dgrad_a)``; the gradient wrt ``b`` is ``-dgrad_a``.
    """
    if a.shape != b.shape:
        raise StructuralError(f"mse shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    loss = float(np.mean(diff * diff))
    grad = (2.0 / diff.size) * diff
    return loss, grad.astype(a.dtype, copy=False)
