from __future__ import annotations

import os
from typing import Any

import pytest

from mbgan_cli.gan.trainer import TrainConfig

SMALL_CONFIG: dict[str, Any] = {
    "name": "small",
    "seed": 3,
    "n_discriminators": 4,
    "batch_size": 32,
    "iterations": 40,
    "latent_dim": 8,
    "g_hidden": [16, 16],
    "d_hidden": [16],
    "alpha_mode": "sigm",
    "checkpoint_every": 10,
    "save_every": 20,
    "plot_every": 20,
    "eval_samples": 256,
    "intra_fid_subset": 64,
}


def small_config(**overrides: Any) -> TrainConfig:
    values = dict(SMALL_CONFIG)
    values.update(overrides)
    return TrainConfig(**values)


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if os.getenv("MBGAN_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set MBGAN_RUN_SLOW=1 to run long acceptance runs")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
