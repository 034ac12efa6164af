from .classifier import (
    ARCHITECTURES,
    ArchitectureSpec,
    Classifier,
    blend_parameters,
    build_classifier,
    copy_parameters,
    load_checkpoint,
    save_checkpoint,
)
from .losses import cross_entropy, mse, softmax
from .optim import SGD

__all__ = [
    "ARCHITECTURES",
    "ArchitectureSpec",
    "Classifier",
    "SGD",
    "blend_parameters",
    "build_classifier",
    "copy_parameters",
    "cross_entropy",
    "load_checkpoint",
    "mse",
    "save_checkpoint",
    "softmax",
]
