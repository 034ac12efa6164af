"""Named experiment presets.

The ``*-b200``/``*-b500`` presets carry the published full-scale
hyperparameters (ResNet-18, 50 epochs per task, lr 0.03, batch 32,
consolidation decay 0.999; rates and loss weights tuned per dataset).
They expect real datasets on disk and hours of compute.

The ``*-desk-*`` presets are reduced-scale configurations used by the
acceptance suite: synthetic shape-defined data, small networks, few
epochs. The consolidation decay is lowered there because the step counts
are two orders of magnitude smaller, so a 0.999 decay would leave the
slow memory frozen at its initial state.
"""

import copy

from .errors import ConfigurationError


def _paper_duca(dataset, num_tasks, buffer, rate, a_wm, a_ibl, setting="class_il",
                arch=None, extra_stream=None):
    stream = {"setting": setting, "num_tasks": num_tasks}
    if extra_stream:
        stream.update(extra_stream)
    return {
        "method": "duca",
        "arch": arch or {"name": "resnet18", "input_shape": [3, 32, 32]},
        "dataset": dataset,
        "stream": stream,
        "train": {
            "lr": 0.03, "batch_size": 32, "epochs_per_task": 50,
            "buffer_capacity": buffer, "smu_rate": rate, "smu_decay": 0.999,
            "align_wm": a_wm, "align_ibl": a_ibl,
        },
        "seeds": [0, 1, 2],
    }


_CIFAR10 = {"name": "cifar10"}
_CIFAR100 = {"name": "cifar100"}
_DN4IL_ARCH = {"name": "resnet18", "input_shape": [3, 64, 64]}

# Desk-scale shared pieces -------------------------------------------------

_DESK_SEQ_DATASET = {
    "name": "synthetic-shapes", "num_classes": 10, "size": 32, "channels": 3,
    "train_per_class": 240, "test_per_class": 100, "seed": 7,
}
_DESK_SEQ_ARCH = {"name": "small-cnn", "input_shape": [3, 32, 32], "width": 16}
_DESK_SEQ_STREAM = {"setting": "class_il", "num_tasks": 5}
_DESK_SEQ_TRAIN = {"lr": 0.05, "batch_size": 32, "epochs_per_task": 5,
                   "buffer_capacity": 200, "augment": True, "crop_pad": 3}

# rotation-unambiguous archetypes: under rotations up to 171 degrees none
# of these aliases into another class, so domain labels stay consistent
_DESK_RMNIST_DATASET = {
    "name": "synthetic-shapes", "size": 28, "channels": 1,
    "classes": ["disk", "square", "triangle", "plus", "ring", "hbars", "checker"],
    "train_per_class": 400, "test_per_class": 50, "seed": 11,
}
_DESK_RMNIST_ARCH = {"name": "mlp", "input_shape": [1, 28, 28], "width": 128}
_DESK_RMNIST_STREAM = {"setting": "domain_il", "rotations": 20}
_DESK_RMNIST_TRAIN = {"lr": 0.1, "batch_size": 32, "epochs_per_task": 1,
                      "buffer_capacity": 200, "augment": False}


def _desk(method, dataset, arch, stream, train, **train_extra):
    train = dict(train, **train_extra)
    return {
        "method": method, "arch": dict(arch), "dataset": dict(dataset),
        "stream": dict(stream), "train": train, "seeds": [0, 1, 2],
    }


PRESETS = {
    # full-scale configurations (published hyperparameters)
    "seq-cifar10-duca-b200": _paper_duca(_CIFAR10, 5, 200, 0.2, 0.1, 0.1),
    "seq-cifar10-duca-b500": _paper_duca(_CIFAR10, 5, 500, 0.2, 0.1, 0.1),
    "seq-cifar100-duca-b200": _paper_duca(_CIFAR100, 5, 200, 0.1, 0.1, 0.01),
    "seq-cifar100-duca-b500": _paper_duca(_CIFAR100, 5, 500, 0.06, 0.1, 0.01),
    "gcil-cifar100-duca-b200": _paper_duca(
        _CIFAR100, 20, 200, 0.09, 0.1, 0.01, setting="gcil",
        extra_stream={"variant": "uniform"}),
    "gcil-cifar100-duca-b500": _paper_duca(
        _CIFAR100, 20, 500, 0.09, 0.1, 0.01, setting="gcil",
        extra_stream={"variant": "uniform"}),
    "dn4il-duca-b200": _paper_duca(
        {"name": "dn4il", "manifest": None}, 6, 200, 0.06, 0.1, 0.01,
        setting="domain_il", arch=_DN4IL_ARCH),
    "dn4il-duca-b500": _paper_duca(
        {"name": "dn4il", "manifest": None}, 6, 500, 0.08, 0.1, 0.01,
        setting="domain_il", arch=_DN4IL_ARCH),

    # desk-scale class-incremental suite (acceptance runs)
    "seq-shapes-desk-duca": _desk(
        "duca", _DESK_SEQ_DATASET, _DESK_SEQ_ARCH, _DESK_SEQ_STREAM, _DESK_SEQ_TRAIN,
        smu_rate=0.3, smu_decay=0.9, align_wm=0.1, align_ibl=0.1),
    "seq-shapes-desk-er": _desk(
        "er", _DESK_SEQ_DATASET, _DESK_SEQ_ARCH, _DESK_SEQ_STREAM, _DESK_SEQ_TRAIN),
    "seq-shapes-desk-derpp": _desk(
        "derpp", _DESK_SEQ_DATASET, _DESK_SEQ_ARCH, _DESK_SEQ_STREAM, _DESK_SEQ_TRAIN,
        alpha=0.1, beta=1.0),
    "seq-shapes-desk-sgd": _desk(
        "sgd", _DESK_SEQ_DATASET, _DESK_SEQ_ARCH, _DESK_SEQ_STREAM, _DESK_SEQ_TRAIN,
        buffer_capacity=0),
    "seq-shapes-desk-joint": _desk(
        "joint", _DESK_SEQ_DATASET, _DESK_SEQ_ARCH, _DESK_SEQ_STREAM, _DESK_SEQ_TRAIN,
        buffer_capacity=0),

    # desk-scale rotation suite (acceptance runs)
    "rmnist-desk-duca": _desk(
        "duca", _DESK_RMNIST_DATASET, _DESK_RMNIST_ARCH, _DESK_RMNIST_STREAM,
        _DESK_RMNIST_TRAIN,
        smu_rate=0.5, smu_decay=0.95, align_wm=0.1, align_ibl=0.1),
    "rmnist-desk-er": _desk(
        "er", _DESK_RMNIST_DATASET, _DESK_RMNIST_ARCH, _DESK_RMNIST_STREAM,
        _DESK_RMNIST_TRAIN),
    "rmnist-desk-derpp": _desk(
        "derpp", _DESK_RMNIST_DATASET, _DESK_RMNIST_ARCH, _DESK_RMNIST_STREAM,
        _DESK_RMNIST_TRAIN, alpha=0.1, beta=1.0),
}


def get_preset(name):
    if name not in PRESETS:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        )
    return copy.deepcopy(PRESETS[name])
