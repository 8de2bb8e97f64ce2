"""Multi-discriminator GAN core: dense networks, losses, alpha schedules and metrics."""

from .alpha import AlphaMode, AlphaSchedule, alpha_derivative, alpha_value, update_beta
from .metrics import MetricsRecord
from .trainer import TrainConfig, TrainState, evaluate, init_state, train, train_step

__all__ = [
    "AlphaMode",
    "AlphaSchedule",
    "MetricsRecord",
    "TrainConfig",
    "TrainState",
    "alpha_derivative",
    "alpha_value",
    "evaluate",
    "init_state",
    "train",
    "train_step",
    "update_beta",
]
