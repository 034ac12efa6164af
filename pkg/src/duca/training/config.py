"""Training configuration dataclasses shared by all methods."""

from dataclasses import dataclass, field

from ..errors import ConfigurationError
from ..shape_filter import ShapeConfig


@dataclass
class TrainConfig:
    """Common knobs: optimizer, schedule, replay buffer, augmentation."""

    lr: float = 0.03
    batch_size: int = 32
    epochs_per_task: int = 50
    buffer_capacity: int = 200
    momentum: float = 0.0
    weight_decay: float = 0.0
    augment: bool = True
    crop_pad: int = 4

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1 or self.epochs_per_task < 1:
            raise ConfigurationError("batch_size and epochs_per_task must be >= 1")
        if self.buffer_capacity < 0:
            raise ConfigurationError("buffer_capacity must be >= 0")
        if not 0 <= self.momentum < 1:
            raise ConfigurationError("momentum must lie in [0,1)")


@dataclass
class DucaConfig(TrainConfig):
    """Three-network method: stochastic consolidation plus sharing losses.

    ``smu_rate``/``smu_decay`` gate and damp the slow-memory blend;
    ``align_wm``/``align_ibl`` weight the knowledge-sharing MSE terms in
    the working-model and shape-learner objectives.
    """

    smu_rate: float = 0.2
    smu_decay: float = 0.999
    align_wm: float = 0.1
    align_ibl: float = 0.1
    shape: ShapeConfig = field(default_factory=ShapeConfig)

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 <= self.smu_rate <= 1.0:
            raise ConfigurationError("smu_rate must lie in [0,1]")
        if not 0.0 <= self.smu_decay <= 1.0:
            raise ConfigurationError("smu_decay must lie in [0,1]")
        if self.align_wm < 0 or self.align_ibl < 0:
            raise ConfigurationError("loss weights must be non-negative")


@dataclass
class DerppConfig(TrainConfig):
    """Replay with stored-logit consistency: alpha on logits, beta on labels."""

    alpha: float = 0.1
    beta: float = 0.5

    def __post_init__(self):
        super().__post_init__()
        if self.alpha < 0 or self.beta < 0:
            raise ConfigurationError("alpha and beta must be non-negative")
