"""Stream harness: epochs over tasks, per-task evaluation, telemetry.

After each task the inference network is evaluated on every task's test
set, producing one row of the accuracy matrix (class-incremental) and one
row of its masked variant (task-incremental: logits outside the task's
class list are suppressed before argmax). The final prediction log feeds
the recency-bias analysis.
"""

from dataclasses import dataclass, field

import numpy as np

from ..datasets import ArrayDataset
from ..evaluation import PredictionLog
from ..nn import softmax
from ..streams import PathDataset, TaskDataset, TaskStream


def iterate_batches(n, batch_size, rng):
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start:start + batch_size]


def evaluate_accuracy(clf, dataset, class_mask=None, batch_size=256):
    """Top-1 accuracy in percent; optionally restrict argmax to a class list."""
    n = len(dataset)
    correct = 0
    for start in range(0, n, batch_size):
        idx = np.arange(start, min(start + batch_size, n))
        logits = clf.logits(dataset.take(idx))
        if class_mask is not None:
            masked = np.full_like(logits, -np.inf)
            masked[:, class_mask] = logits[:, class_mask]
            logits = masked
        correct += int((logits.argmax(axis=1) == dataset.labels[idx]).sum())
    return 100.0 * correct / max(n, 1)


def prediction_log(clf, stream, batch_size=256):
    """Softmax outputs of the inference model over every task's test set."""
    probs, labels, task_ids = [], [], []
    for task in stream.tasks:
        ds = task.test
        for start in range(0, len(ds), batch_size):
            idx = np.arange(start, min(start + batch_size, len(ds)))
            probs.append(softmax(clf.logits(ds.take(idx)).astype(np.float64)))
            labels.append(ds.labels[idx])
            task_ids.append(np.full(len(idx), task.task_id))
    return PredictionLog(
        np.concatenate(probs), np.concatenate(labels), np.concatenate(task_ids)
    )


@dataclass
class RunResult:
    matrix: np.ndarray
    task_il_matrix: np.ndarray
    log: PredictionLog
    telemetry: list = field(default_factory=list)

    @property
    def final_row(self):
        return self.matrix[-1]


def _pool_tasks(stream):
    """Union of all task train sets as a single task (upper-bound training)."""
    trains = [t.train for t in stream.tasks]
    if all(isinstance(t, ArrayDataset) for t in trains):
        images = np.concatenate([t.images for t in trains])
        labels = np.concatenate([t.labels for t in trains])
        pooled = ArrayDataset(images, labels, trains[0].class_names)
    elif all(isinstance(t, PathDataset) for t in trains):
        pooled = PathDataset(
            trains[0].root,
            [p for t in trains for p in t.relpaths],
            np.concatenate([t.labels for t in trains]),
            trains[0].class_names,
            trains[0].image_size,
        )
    else:
        raise TypeError("cannot pool mixed dataset kinds")
    classes = sorted({c for t in stream.tasks for c in t.classes})
    return TaskDataset(0, classes, pooled, stream.tasks[0].test)


def train_stream(trainer, stream, seed=0, hooks=None, joint=False):
    """Train through the stream and return matrices, log, and telemetry."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x10_0D]))
    train_tasks = [_pool_tasks(stream)] if joint else stream.tasks
    t_count = len(stream.tasks)
    matrix = np.zeros((len(train_tasks), t_count))
    task_il = np.zeros((len(train_tasks), t_count))
    telemetry = []

    for ti, task in enumerate(train_tasks):
        trainer.start_task(ti)
        n = len(task.train)
        for epoch in range(trainer.config.epochs_per_task):
            sums, counts = {}, {}
            for idx in iterate_batches(n, trainer.config.batch_size, rng):
                x = task.train.take(idx)
                y = task.train.labels[idx]
                breakdown = trainer.observe(x, y)
                for k, v in breakdown.as_dict().items():
                    sums[k] = sums.get(k, 0.0) + v
                    counts[k] = counts.get(k, 0) + 1
            means = {k: sums[k] / counts[k] for k in sums}
            telemetry.append({"task": ti, "epoch": epoch, **means})
            if hooks is not None and hasattr(hooks, "on_epoch"):
                hooks.on_epoch(ti, epoch, means)
        model = trainer.eval_model()
        for tj, other in enumerate(stream.tasks):
            matrix[ti, tj] = evaluate_accuracy(model, other.test)
            task_il[ti, tj] = evaluate_accuracy(model, other.test, class_mask=other.classes)
        if hooks is not None and hasattr(hooks, "on_task"):
            hooks.on_task(ti, matrix[ti].copy(), task_il[ti].copy())

    log = prediction_log(trainer.eval_model(), stream)
    return RunResult(matrix, task_il, log, telemetry)
