from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import logging
from typing import Callable, Iterator

import numpy as np

LOGGER = logging.getLogger(__name__)

Matrix = np.ndarray


class DimensionMismatch(ValueError):
    pass


class TapeMismatch(ValueError):
    pass


class NonFiniteLoss(ArithmeticError):
    pass


class Activation(str, Enum):
    RELU = "relu"
    LINEAR = "linear"
    SOFTPLUS = "softplus"
    SIGMOID = "sigmoid"
    TANH = "tanh"


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionMismatch(f"matmul expects 2D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"matmul: {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def sigmoid(v: Matrix) -> Matrix:
    return 0.5 * (1.0 + np.tanh(0.5 * v))


def softplus(v: Matrix) -> Matrix:
    # max(v, 0) + log1p(exp(-|v|)) never overflows
    return np.maximum(v, 0.0) + np.log1p(np.exp(-np.abs(v)))


def log_sigmoid(v: Matrix) -> Matrix:
    return -softplus(-v)


def apply_activation(x: Matrix, tag: Activation) -> Matrix:
    tag = Activation(tag)
    if tag is Activation.RELU:
        return np.maximum(x, 0.0)
    if tag is Activation.LINEAR:
        return x.copy()
    if tag is Activation.SOFTPLUS:
        return softplus(x)
    if tag is Activation.SIGMOID:
        return sigmoid(x)
    return np.tanh(x)


def activation_derivative(pre: Matrix, post: Matrix, tag: Activation) -> Matrix:
    tag = Activation(tag)
    if tag is Activation.RELU:
        return (pre > 0.0).astype(np.float64)
    if tag is Activation.LINEAR:
        return np.ones_like(pre)
    if tag is Activation.SOFTPLUS:
        return sigmoid(pre)
    if tag is Activation.SIGMOID:
        return post * (1.0 - post)
    return 1.0 - post * post


@dataclass(slots=True)
class Layer:
    weight: Matrix
    bias: Matrix
    activation: Activation = Activation.LINEAR

    @property
    def fan_in(self) -> int:
        return int(self.weight.shape[0])

    @property
    def fan_out(self) -> int:
        return int(self.weight.shape[1])


@dataclass(slots=True)
class MlpParams:
    """Fully connected stack; weights are (fan_in, fan_out), biases (1, fan_out)."""

    layers: list[Layer] = field(default_factory=list)

    @property
    def input_dim(self) -> int:
        return self.layers[0].fan_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].fan_out

    def tensors(self) -> list[Matrix]:
        out: list[Matrix] = []
        for layer in self.layers:
            out.append(layer.weight)
            out.append(layer.bias)
        return out

    def tensor_names(self, prefix: str) -> list[str]:
        names: list[str] = []
        for idx in range(len(self.layers)):
            names.append(f"{prefix}.layer{idx}.weight")
            names.append(f"{prefix}.layer{idx}.bias")
        return names

    def activations(self) -> list[Activation]:
        return [layer.activation for layer in self.layers]

    def copy(self) -> MlpParams:
        return MlpParams(
            layers=[Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers]
        )

    def zeros_like(self) -> MlpParams:
        return MlpParams(
            layers=[
                Layer(np.zeros_like(l.weight), np.zeros_like(l.bias), l.activation)
                for l in self.layers
            ]
        )

    def add_(self, other: MlpParams, scale: float = 1.0) -> MlpParams:
        for mine, theirs in zip(self.layers, other.layers):
            mine.weight += scale * theirs.weight
            mine.bias += scale * theirs.bias
        return self

    def num_parameters(self) -> int:
        return int(sum(t.size for t in self.tensors()))


@dataclass(slots=True)
class Tape:
    inputs: list[Matrix]
    pre: list[Matrix]
    post: list[Matrix]

    @property
    def output(self) -> Matrix:
        return self.post[-1]


def mlp_forward(params: MlpParams, x: Matrix) -> tuple[Matrix, Tape]:
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise DimensionMismatch(
            f"Input has shape {x.shape}, network expects {params.input_dim} columns"
        )
    tape = Tape(inputs=[], pre=[], post=[])
    h = x
    for layer in params.layers:
        tape.inputs.append(h)
        z = matmul(h, layer.weight) + layer.bias
        h = apply_activation(z, layer.activation)
        tape.pre.append(z)
        tape.post.append(h)
    return h, tape


def mlp_backward(params: MlpParams, tape: Tape, output_grad: Matrix) -> tuple[MlpParams, Matrix]:
    if len(tape.pre) != len(params.layers):
        raise TapeMismatch(
            f"Tape holds {len(tape.pre)} layers, network has {len(params.layers)}"
        )
    if output_grad.shape != tape.output.shape:
        raise TapeMismatch(
            f"Output gradient shape {output_grad.shape} does not match forward output {tape.output.shape}"
        )

    grads: list[Layer] = []
    g = output_grad
    for idx in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[idx]
        if tape.inputs[idx].shape[1] != layer.fan_in or tape.pre[idx].shape[1] != layer.fan_out:
            raise TapeMismatch(f"Layer {idx} shapes disagree with the recorded tape")
        dz = g * activation_derivative(tape.pre[idx], tape.post[idx], layer.activation)
        grad_w = matmul(tape.inputs[idx].T, dz)
        grad_b = dz.sum(axis=0, keepdims=True)
        grads.append(Layer(grad_w, grad_b, layer.activation))
        g = matmul(dz, layer.weight.T)
    grads.reverse()
    return MlpParams(layers=grads), g


LossFn = Callable[[MlpParams], "tuple[float, MlpParams]"]


def _iter_coordinates(params: MlpParams) -> Iterator[tuple[int, int, tuple[int, int]]]:
    for t_idx, tensor in enumerate(params.tensors()):
        for flat in range(tensor.size):
            yield t_idx, flat, np.unravel_index(flat, tensor.shape)  # type: ignore[misc]


def grad_check(
    params: MlpParams,
    loss_fn: LossFn,
    epsilon: float = 1e-5,
    *,
    max_checks: int | None = None,
    seed: int = 0,
) -> float:
    """Worst relative error between analytic and central-difference gradients.

    ``loss_fn`` maps a parameter set to ``(loss, analytic_grads)``; only the
    scalar is used for the numeric side. With ``max_checks`` a seeded random
    subset of coordinates is probed instead of every parameter.
    """
    if not 0.0 < epsilon <= 1e-2:
        raise ValueError(f"epsilon must lie in (0, 1e-2], got {epsilon}")

    loss0, analytic = loss_fn(params)
    if not np.isfinite(loss0):
        raise NonFiniteLoss(f"Loss is not finite at the base point: {loss0}")
    analytic_tensors = analytic.tensors()

    coords = list(_iter_coordinates(params))
    if max_checks is not None and max_checks < len(coords):
        picker = np.random.default_rng(seed)
        chosen = picker.choice(len(coords), size=max_checks, replace=False)
        coords = [coords[i] for i in sorted(chosen)]

    probe = params.copy()
    tensors = probe.tensors()
    worst = 0.0
    for t_idx, _flat, index in coords:
        target = tensors[t_idx]
        original = target[index]
        target[index] = original + epsilon
        plus, _ = loss_fn(probe)
        target[index] = original - epsilon
        minus, _ = loss_fn(probe)
        target[index] = original
        if not (np.isfinite(plus) and np.isfinite(minus)):
            raise NonFiniteLoss(f"Loss became non-finite while probing tensor {t_idx}")
        numeric = (plus - minus) / (2.0 * epsilon)
        exact = float(analytic_tensors[t_idx][index])
        denom = max(abs(exact), abs(numeric), 1e-8)
        worst = max(worst, abs(exact - numeric) / denom)
    LOGGER.debug("grad_check probed %d coordinates, worst relative error %.3e", len(coords), worst)
    return worst
