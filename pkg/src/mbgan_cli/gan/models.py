from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Sequence

import numpy as np

from .ndcore import (
    Activation,
    DimensionMismatch,
    Layer,
    Matrix,
    MlpParams,
    log_sigmoid,
    mlp_forward,
    sigmoid,
    softplus,
)
from .synthdata import seeded_rng

PROB_CLAMP = 1e-7

DEFAULT_LEARNING_RATE = 0.0002
DEFAULT_ADAM_BETA1 = 0.5
DEFAULT_ADAM_BETA2 = 0.999
DEFAULT_ADAM_EPS = 1e-8


class NonFiniteGradient(ArithmeticError):
    pass


class HeadMode(str, Enum):
    LOGIT = "logit"
    SOFTPLUS = "softplus"


class Direction(str, Enum):
    ASCEND = "ascend"
    DESCEND = "descend"


class InitScheme(str, Enum):
    HE_NORMAL = "he_normal"
    GLOROT_UNIFORM = "glorot_uniform"


@dataclass(frozen=True, slots=True)
class GeneratorSpec:
    latent_dim: int = 256
    hidden: tuple[int, ...] = (128, 128)
    output_dim: int = 2
    hidden_activation: Activation = Activation.RELU
    output_activation: Activation = Activation.LINEAR

    def widths(self) -> list[int]:
        return [self.latent_dim, *self.hidden, self.output_dim]

    def layer_activations(self) -> list[Activation]:
        return [self.hidden_activation] * len(self.hidden) + [self.output_activation]


@dataclass(frozen=True, slots=True)
class DiscriminatorSpec:
    input_dim: int = 2
    hidden: tuple[int, ...] = (128,)
    output_dim: int = 1
    hidden_activation: Activation = Activation.RELU
    head: HeadMode = HeadMode.LOGIT

    def widths(self) -> list[int]:
        return [self.input_dim, *self.hidden, self.output_dim]

    def layer_activations(self) -> list[Activation]:
        # the head is applied on the raw score, outside the layer stack
        return [self.hidden_activation] * len(self.hidden) + [Activation.LINEAR]


def init_params(
    spec: GeneratorSpec | DiscriminatorSpec,
    seed: int | np.random.Generator,
    scheme: InitScheme = InitScheme.HE_NORMAL,
) -> MlpParams:
    """Initial weights for ``spec``; biases start at zero under every scheme.

    ``he_normal`` draws N(0, gain/fan_in) with gain 2 for ReLU layers and 1
    otherwise. ``glorot_uniform`` draws U(-l, l) with l = sqrt(6/(fan_in+fan_out)),
    the default of TensorFlow dense layers.
    """
    rng = seed if isinstance(seed, np.random.Generator) else seeded_rng(seed)
    scheme = InitScheme(scheme)
    widths = spec.widths()
    layers: list[Layer] = []
    for fan_in, fan_out, activation in zip(widths[:-1], widths[1:], spec.layer_activations()):
        if scheme is InitScheme.GLOROT_UNIFORM:
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            weight = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        else:
            gain = 2.0 if activation is Activation.RELU else 1.0
            weight = rng.normal(0.0, math.sqrt(gain / fan_in), size=(fan_in, fan_out))
        bias = np.zeros((1, fan_out), dtype=np.float64)
        layers.append(Layer(weight=weight, bias=bias, activation=activation))
    return MlpParams(layers=layers)


def discriminator_raw(d_params: MlpParams, x: Matrix) -> Matrix:
    if x.ndim != 2 or x.shape[1] != d_params.input_dim:
        raise DimensionMismatch(
            f"Discriminator expects {d_params.input_dim} columns, got shape {x.shape}"
        )
    raw, _ = mlp_forward(d_params, x)
    return raw


def head_prob(raw: Matrix, head: HeadMode) -> Matrix:
    if HeadMode(head) is HeadMode.LOGIT:
        return np.clip(sigmoid(raw), PROB_CLAMP, 1.0 - PROB_CLAMP)
    return np.clip(softplus(raw), PROB_CLAMP, 1.0 - PROB_CLAMP)


def discriminator_prob(d_params: MlpParams, x: Matrix, head: HeadMode = HeadMode.LOGIT) -> Matrix:
    return head_prob(discriminator_raw(d_params, x), head)


def log_real(raw: Matrix, head: HeadMode) -> tuple[Matrix, Matrix]:
    """log D as a function of the raw score, with its derivative."""
    if HeadMode(head) is HeadMode.LOGIT:
        return log_sigmoid(raw), sigmoid(-raw)
    sp = softplus(raw)
    p = np.clip(sp, PROB_CLAMP, 1.0 - PROB_CLAMP)
    inside = (sp > PROB_CLAMP) & (sp < 1.0 - PROB_CLAMP)
    return np.log(p), np.where(inside, sigmoid(raw) / p, 0.0)


def log_fake(raw: Matrix, head: HeadMode) -> tuple[Matrix, Matrix]:
    """log(1 - D) as a function of the raw score, with its derivative."""
    if HeadMode(head) is HeadMode.LOGIT:
        return log_sigmoid(-raw), -sigmoid(raw)
    sp = softplus(raw)
    p = np.clip(sp, PROB_CLAMP, 1.0 - PROB_CLAMP)
    inside = (sp > PROB_CLAMP) & (sp < 1.0 - PROB_CLAMP)
    return np.log1p(-p), np.where(inside, -sigmoid(raw) / (1.0 - p), 0.0)


ParamsLike = MlpParams | Sequence[Matrix]


def _tensors(obj: ParamsLike) -> list[Matrix]:
    if isinstance(obj, MlpParams):
        return obj.tensors()
    return list(obj)


@dataclass(slots=True)
class AdamState:
    lr: float = DEFAULT_LEARNING_RATE
    beta1: float = DEFAULT_ADAM_BETA1
    beta2: float = DEFAULT_ADAM_BETA2
    eps: float = DEFAULT_ADAM_EPS
    step_count: int = 0
    first_moment: list[Matrix] = field(default_factory=list)
    second_moment: list[Matrix] = field(default_factory=list)

    @classmethod
    def for_params(
        cls,
        params: ParamsLike,
        *,
        lr: float = DEFAULT_LEARNING_RATE,
        beta1: float = DEFAULT_ADAM_BETA1,
        beta2: float = DEFAULT_ADAM_BETA2,
        eps: float = DEFAULT_ADAM_EPS,
    ) -> AdamState:
        tensors = _tensors(params)
        return cls(
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            first_moment=[np.zeros_like(t) for t in tensors],
            second_moment=[np.zeros_like(t) for t in tensors],
        )

    def moment_tensors(self) -> list[Matrix]:
        return [*self.first_moment, *self.second_moment]


def adam_step(
    state: AdamState,
    params: ParamsLike,
    grads: ParamsLike,
    direction: Direction = Direction.DESCEND,
) -> ParamsLike:
    """One bias-corrected Adam update applied in place; returns ``params``."""
    targets = _tensors(params)
    gradients = _tensors(grads)
    if len(targets) != len(gradients):
        raise DimensionMismatch(f"{len(gradients)} gradients for {len(targets)} parameter tensors")
    if not state.first_moment:
        state.first_moment = [np.zeros_like(t) for t in targets]
        state.second_moment = [np.zeros_like(t) for t in targets]
    for idx, (target, grad) in enumerate(zip(targets, gradients)):
        if grad.shape != target.shape or state.first_moment[idx].shape != target.shape:
            raise DimensionMismatch(
                f"Tensor {idx}: gradient {grad.shape}, parameter {target.shape}, "
                f"moment {state.first_moment[idx].shape}"
            )
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradient(f"Gradient tensor {idx} holds NaN or Inf")

    state.step_count += 1
    bias1 = 1.0 - state.beta1**state.step_count
    bias2 = 1.0 - state.beta2**state.step_count
    sign = 1.0 if Direction(direction) is Direction.ASCEND else -1.0
    for target, grad, m, v in zip(targets, gradients, state.first_moment, state.second_moment):
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * (grad * grad)
        step = state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
        target += sign * step
    return params
