from __future__ import annotations

from dataclasses import asdict, dataclass
from hashlib import sha256
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from .gan.alpha import AlphaMode
from .gan.models import AdamState
from .gan.ndcore import MlpParams
from .gan.trainer import TrainConfig, TrainState, init_state

LOGGER = logging.getLogger(__name__)

MAGIC = b"MBGN1"
FORMAT_VERSION = 1
_DIGEST_SIZE = 32
_U64 = np.dtype("<u8")
_I64 = np.dtype("<i8")
_F64 = np.dtype("<f8")


class CheckpointCorrupt(RuntimeError):
    pass


class ShapeMismatch(ValueError):
    pass


@dataclass(slots=True)
class Checkpoint:
    header: dict[str, Any]
    tensors: dict[str, np.ndarray]

    @property
    def iteration(self) -> int:
        return int(self.header["iteration"])

    @property
    def config_values(self) -> dict[str, Any]:
        return dict(self.header["config"])


def _adam_names(prefix: str, param_names: list[str]) -> list[str]:
    return [f"{prefix}.m.{n}" for n in param_names] + [f"{prefix}.v.{n}" for n in param_names]


def state_tensors(state: TrainState) -> dict[str, np.ndarray]:
    named: dict[str, np.ndarray] = {}

    def _put(names: list[str], tensors: list[np.ndarray]) -> None:
        for name, tensor in zip(names, tensors):
            named[name] = tensor

    g_names = state.g_params.tensor_names("g")
    _put(g_names, state.g_params.tensors())
    _put(_adam_names("adam.g", g_names), state.g_adam.moment_tensors())
    for k, (d_params, d_adam) in enumerate(zip(state.d_params, state.d_adams)):
        d_names = d_params.tensor_names(f"d{k}")
        _put(d_names, d_params.tensors())
        _put(_adam_names(f"adam.d{k}", d_names), d_adam.moment_tensors())
    named["beta"] = np.array([[state.schedule.beta]])
    if state.schedule.mode.learned:
        _put(_adam_names("adam.beta", ["beta"]), state.schedule.adam.moment_tensors())
    return named


def _encode_tensor(tensor: np.ndarray) -> bytes:
    dims = np.asarray(tensor.shape, dtype=_I64)
    return (
        np.asarray([tensor.ndim], dtype=_U64).tobytes()
        + dims.tobytes()
        + np.ascontiguousarray(tensor, dtype=_F64).tobytes()
    )


def save_checkpoint(path: Path, state: TrainState) -> Path:
    tensors = state_tensors(state)
    header = {
        "format": FORMAT_VERSION,
        "iteration": state.iteration,
        "config": asdict(state.config),
        "rng_state": state.rng.bit_generator.state,
        "alpha": {
            "mode": state.schedule.mode.value,
            "value": state.schedule.value,
            "beta_floor": state.schedule.beta_floor,
        },
        "adam_steps": {
            "g": state.g_adam.step_count,
            "d": [a.step_count for a in state.d_adams],
            "beta": state.schedule.adam.step_count,
        },
        "last_d_losses": state.last_d_losses,
        "last_g_loss": state.last_g_loss,
        "tensors": list(tensors),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = bytearray(MAGIC)
    body += np.asarray([len(header_bytes)], dtype=_U64).tobytes()
    body += header_bytes
    for tensor in tensors.values():
        body += _encode_tensor(tensor)
    body += sha256(bytes(body)).digest()

    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(bytes(body))
    tmp.replace(path)
    LOGGER.debug("Saved checkpoint %s at iteration %d", path, state.iteration)
    return path


class _Reader:
    def __init__(self, data: bytes, source: Path) -> None:
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise CheckpointCorrupt(f"Checkpoint {self.source} ends early at byte {self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u64(self) -> int:
        return int(np.frombuffer(self.take(8), dtype=_U64)[0])


def load_checkpoint(path: Path) -> Checkpoint:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointCorrupt(f"Cannot read checkpoint {path}: {exc}") from exc
    if not raw.startswith(MAGIC):
        raise CheckpointCorrupt(f"{path} is not a checkpoint (bad magic)")
    if len(raw) < len(MAGIC) + 8 + _DIGEST_SIZE:
        raise CheckpointCorrupt(f"Checkpoint {path} is truncated")
    payload, digest = raw[:-_DIGEST_SIZE], raw[-_DIGEST_SIZE:]
    if sha256(payload).digest() != digest:
        raise CheckpointCorrupt(f"Checkpoint {path} failed its integrity check")

    reader = _Reader(payload, path)
    reader.take(len(MAGIC))
    try:
        header = json.loads(reader.take(reader.u64()).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointCorrupt(f"Checkpoint {path} has an unreadable header") from exc
    if header.get("format") != FORMAT_VERSION:
        raise CheckpointCorrupt(f"Unsupported checkpoint format {header.get('format')!r}")

    tensors: dict[str, np.ndarray] = {}
    for name in header.get("tensors", []):
        ndim = reader.u64()
        if ndim > 8:
            raise CheckpointCorrupt(f"Tensor {name} claims {ndim} dimensions")
        dims = tuple(int(d) for d in np.frombuffer(reader.take(8 * ndim), dtype=_I64))
        if any(d < 0 for d in dims):
            raise CheckpointCorrupt(f"Tensor {name} has negative dimensions {dims}")
        count = int(np.prod(dims)) if dims else 1
        values = np.frombuffer(reader.take(8 * count), dtype=_F64).reshape(dims)
        tensors[name] = values.copy()
    if reader.pos != len(payload):
        raise CheckpointCorrupt(f"Checkpoint {path} has {len(payload) - reader.pos} trailing bytes")
    return Checkpoint(header=header, tensors=tensors)


def _fill(target: np.ndarray, name: str, stored: dict[str, np.ndarray]) -> None:
    if name not in stored:
        raise ShapeMismatch(f"Tensor {name} is missing from the checkpoint")
    source = stored[name]
    if source.shape != target.shape:
        raise ShapeMismatch(f"Tensor {name}: checkpoint has {source.shape}, config expects {target.shape}")
    target[...] = source


def _restore_adam(adam: AdamState, prefix: str, names: list[str], stored: dict[str, np.ndarray], steps: int) -> None:
    for target, name in zip(adam.moment_tensors(), _adam_names(prefix, names)):
        _fill(target, name, stored)
    adam.step_count = int(steps)


def _restore_params(params: MlpParams, names: list[str], stored: dict[str, np.ndarray]) -> None:
    for target, name in zip(params.tensors(), names):
        _fill(target, name, stored)


def restore_state(checkpoint: Checkpoint, config: TrainConfig) -> TrainState:
    """Rebuild a TrainState for ``config`` and load every tensor from ``checkpoint``."""
    state = init_state(config)
    expected = state_tensors(state)
    for name in checkpoint.tensors:
        if name not in expected:
            raise ShapeMismatch(f"Tensor {name} in the checkpoint has no place in this config")

    stored = checkpoint.tensors
    steps = checkpoint.header["adam_steps"]
    g_names = state.g_params.tensor_names("g")
    _restore_params(state.g_params, g_names, stored)
    _restore_adam(state.g_adam, "adam.g", g_names, stored, steps["g"])
    for k, (d_params, d_adam) in enumerate(zip(state.d_params, state.d_adams)):
        d_names = d_params.tensor_names(f"d{k}")
        _restore_params(d_params, d_names, stored)
        _restore_adam(d_adam, f"adam.d{k}", d_names, stored, steps["d"][k])

    alpha = checkpoint.header["alpha"]
    if AlphaMode(alpha["mode"]) is not state.schedule.mode:
        raise ShapeMismatch(
            f"Checkpoint alpha mode {alpha['mode']} differs from config alpha_mode {config.alpha_mode}"
        )
    if state.schedule.mode.learned:
        state.schedule.beta = float(stored["beta"][0, 0])
        state.schedule.beta_floor = float(alpha["beta_floor"])
        _restore_adam(state.schedule.adam, "adam.beta", ["beta"], stored, steps["beta"])

    state.rng.bit_generator.state = checkpoint.header["rng_state"]
    state.iteration = checkpoint.iteration
    state.last_d_losses = [float(v) for v in checkpoint.header.get("last_d_losses", [])]
    state.last_g_loss = float(checkpoint.header.get("last_g_loss", float("nan")))
    return state
