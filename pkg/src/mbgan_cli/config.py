from __future__ import annotations

from dataclasses import asdict, fields
import json
import math
import os
from pathlib import Path
from typing import Any

import yaml

from .gan.alpha import NON_NEGATIVE_BETA_MODES, AlphaMode
from .gan.models import HeadMode, InitScheme
from .gan.trainer import TrainConfig

ENV_LOG_LEVEL = "MBGAN_LOG_LEVEL"
ENV_ITERATIONS = "MBGAN_ITERATIONS"
ENV_WORKERS = "MBGAN_WORKERS"

CONFIG_ECHO_NAME = "config-echo.json"

DEFAULT_CONFIG_VALUES: dict[str, Any] = asdict(TrainConfig())

_INT_KEYS = {
    "seed",
    "n_discriminators",
    "batch_size",
    "iterations",
    "latent_dim",
    "n_modes",
    "checkpoint_every",
    "save_every",
    "plot_every",
    "eval_samples",
    "intra_fid_subset",
}
_FLOAT_KEYS = {
    "learning_rate",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "alpha_value",
    "ring_radius",
    "mode_std",
    "hq_threshold_stds",
    "capture_share",
}
_LIST_KEYS = {"g_hidden", "d_hidden"}


class ConfigInvalid(ValueError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"Invalid config key '{key}': {message}")
        self.key = key


def _read_mapping(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in {".yaml", ".yml"}:
            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigInvalid("<root>", f"cannot parse {path}: {exc}") from exc

    if not isinstance(data, dict):
        raise ConfigInvalid("<root>", "config root must be a mapping")
    return data


def write_config(config_path: Path, config: TrainConfig) -> None:
    config_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = config_path.with_suffix(config_path.suffix + ".tmp")
    tmp.write_text(json.dumps(asdict(config), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(config_path)


def _coerce(key: str, value: Any) -> Any:
    try:
        if key in _INT_KEYS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(f"expected an integer, got {value!r}")
            return int(value)
        if key in _FLOAT_KEYS:
            number = float(value)
            if not math.isfinite(number):
                raise ValueError("must be finite")
            return number
        if key in _LIST_KEYS:
            if not isinstance(value, (list, tuple)) or not value:
                raise ValueError("expected a non-empty list of layer widths")
            widths = [int(v) for v in value]
            if any(w < 1 for w in widths):
                raise ValueError("layer widths must be positive")
            return widths
        if key == "beta_init":
            return None if value is None else float(value)
        return str(value).strip()
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(key, str(exc)) from exc


def config_from_mapping(values: dict[str, Any]) -> TrainConfig:
    known = {f.name for f in fields(TrainConfig)}
    for key in values:
        if key not in known:
            raise ConfigInvalid(key, "unknown key")
    merged = dict(DEFAULT_CONFIG_VALUES)
    merged.update(values)
    config = TrainConfig(**{key: _coerce(key, merged[key]) for key in known})
    validate_config(config)
    return config


def validate_config(config: TrainConfig) -> None:
    if not -(1 << 63) <= config.seed < (1 << 64):
        raise ConfigInvalid("seed", "must fit in 64 bits")
    if config.n_discriminators < 1:
        raise ConfigInvalid("n_discriminators", "must be >= 1")
    if config.batch_size < 1:
        raise ConfigInvalid("batch_size", "must be >= 1")
    if config.batch_size % config.n_discriminators != 0:
        raise ConfigInvalid(
            "batch_size",
            f"{config.batch_size} is not divisible by n_discriminators={config.n_discriminators}",
        )
    if config.iterations < 0:
        raise ConfigInvalid("iterations", "must be >= 0")
    if config.latent_dim < 1:
        raise ConfigInvalid("latent_dim", "must be >= 1")
    try:
        HeadMode(config.d_head)
    except ValueError as exc:
        raise ConfigInvalid("d_head", f"expected one of {[h.value for h in HeadMode]}") from exc
    try:
        InitScheme(config.init_scheme)
    except ValueError as exc:
        raise ConfigInvalid(
            "init_scheme", f"expected one of {[s.value for s in InitScheme]}"
        ) from exc
    try:
        mode = AlphaMode(config.alpha_mode)
    except ValueError as exc:
        raise ConfigInvalid("alpha_mode", f"expected one of {[m.value for m in AlphaMode]}") from exc
    if mode is AlphaMode.STATIC and not 0.0 <= config.alpha_value <= 1.0:
        raise ConfigInvalid("alpha_value", "static alpha must lie in [0, 1]")
    if config.beta_init is not None and not math.isfinite(config.beta_init):
        raise ConfigInvalid("beta_init", "must be finite")
    if (
        mode in NON_NEGATIVE_BETA_MODES
        and config.beta_init is not None
        and config.beta_init < 0.0
    ):
        raise ConfigInvalid("beta_init", f"must be >= 0 for alpha_mode={mode.value}")
    if config.learning_rate <= 0:
        raise ConfigInvalid("learning_rate", "must be > 0")
    for key in ("adam_beta1", "adam_beta2"):
        if not 0.0 <= getattr(config, key) < 1.0:
            raise ConfigInvalid(key, "must lie in [0, 1)")
    if config.adam_eps <= 0:
        raise ConfigInvalid("adam_eps", "must be > 0")
    if config.n_modes < 1:
        raise ConfigInvalid("n_modes", "must be >= 1")
    if config.ring_radius <= 0:
        raise ConfigInvalid("ring_radius", "must be > 0")
    if config.mode_std <= 0:
        raise ConfigInvalid("mode_std", "must be > 0")
    for key in ("checkpoint_every", "save_every", "plot_every"):
        if getattr(config, key) < 1:
            raise ConfigInvalid(key, "must be >= 1")
    if config.intra_fid_subset < 2:
        raise ConfigInvalid("intra_fid_subset", "must be >= 2")
    if config.eval_samples < 2 * config.intra_fid_subset:
        raise ConfigInvalid("eval_samples", "must be at least twice intra_fid_subset")
    if config.hq_threshold_stds <= 0:
        raise ConfigInvalid("hq_threshold_stds", "must be > 0")
    if not 0.0 < config.capture_share <= 1.0:
        raise ConfigInvalid("capture_share", "must lie in (0, 1]")


def load_config(
    config_path: Path | None = None,
    cli_seed: int | None = None,
    cli_iterations: int | None = None,
) -> TrainConfig:
    """Resolve a TrainConfig: CLI option > environment > config file > defaults."""
    raw = _read_mapping(config_path) if config_path is not None else {}

    env_iterations = os.getenv(ENV_ITERATIONS)
    if cli_iterations is not None:
        raw["iterations"] = cli_iterations
    elif env_iterations:
        raw["iterations"] = env_iterations
    if cli_seed is not None:
        raw["seed"] = cli_seed
    return config_from_mapping(raw)


def resolve_workers(cli_workers: int | None) -> int:
    if cli_workers is not None:
        return max(1, int(cli_workers))
    env_workers = os.getenv(ENV_WORKERS)
    if env_workers:
        try:
            return max(1, int(env_workers))
        except ValueError as exc:
            raise ConfigInvalid(ENV_WORKERS, f"not an integer: {env_workers!r}") from exc
    return 1


def resolve_log_level() -> str:
    return (os.getenv(ENV_LOG_LEVEL) or "WARNING").strip().upper()
