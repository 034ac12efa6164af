"""Analyses over accuracy matrices and prediction logs.

The accuracy matrix holds percent accuracy on task j's test set after
finishing training task i. The average is the mean of the last row;
learning ability is the mean diagonal; retention is the mean of the final
row excluding the just-finished last task. Recency bias sums softmax mass
over each task's class set, averaged over all test samples.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, StructuralError


@dataclass
class PredictionLog:
    """Per test sample: full probability vector, true class, source task."""

    probs: np.ndarray
    labels: np.ndarray
    task_ids: np.ndarray

    def __post_init__(self):
        if self.probs.ndim != 2 or len(self.probs) != len(self.labels) != len(self.task_ids):
            raise StructuralError("prediction log arrays are inconsistent")
        sums = self.probs.sum(axis=1)
        if (self.probs < 0).any() or np.abs(sums - 1).max() > 1e-5:
            raise StructuralError("probability vectors must be non-negative and sum to 1")


def _as_matrix(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise StructuralError(f"accuracy matrix must be 2-D, got shape {m.shape}")
    if (m < 0).any() or (m > 100).any():
        raise StructuralError("accuracy entries must lie in [0,100]")
    return m


def average_accuracy(matrix):
    """Mean over the last row: final accuracy averaged over all tasks."""
    return float(_as_matrix(matrix)[-1].mean())


def plasticity(matrix):
    """Mean accuracy of each task right after it was learned (diagonal)."""
    m = _as_matrix(matrix)
    t = min(m.shape)
    return float(np.mean([m[i, i] for i in range(t)]))


def stability(matrix):
    """Mean final-row accuracy over all tasks except the last one."""
    m = _as_matrix(matrix)
    if m.shape[1] < 2:
        raise ConfigurationError("stability needs at least two tasks")
    return float(m[-1, :-1].mean())


def recency_bias(log, task_class_lists):
    """Average probability mass assigned to each task's class set.

    Sums to 1 when the task class sets partition the label space.
    """
    k = log.probs.shape[1]
    seen = set()
    for classes in task_class_lists:
        bad = set(classes) - set(range(k))
        if bad:
            raise ConfigurationError(f"task classes {sorted(bad)} outside the {k}-class space")
        seen.update(classes)
    out = np.array([log.probs[:, classes].sum(axis=1).mean()
                    for classes in task_class_lists])
    return out
