from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from .models import AdamState, Direction, NonFiniteGradient, adam_step


class StaticScheduleHasNoGradient(ValueError):
    pass


class AlphaMode(str, Enum):
    STATIC = "static"
    SIGM = "sigm"
    SOFT = "soft"
    TANH = "tanh"
    IDENT = "ident"

    @property
    def learned(self) -> bool:
        return self is not AlphaMode.STATIC


# Initial value of beta doubles as its lower bound for the bounded functions.
DEFAULT_BETA_INIT: dict[AlphaMode, float] = {
    AlphaMode.SIGM: -1.8,
    AlphaMode.SOFT: 0.0,
    AlphaMode.TANH: 0.0,
    AlphaMode.IDENT: 0.0,
}

# alpha(beta) < 0 for beta < 0 here; initial beta (the floor) must be >= 0.
NON_NEGATIVE_BETA_MODES = frozenset({AlphaMode.SOFT, AlphaMode.TANH})

STATIC_GRID = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass(slots=True)
class AlphaSchedule:
    mode: AlphaMode
    value: float = 0.0
    beta: float = 0.0
    beta_floor: float = -math.inf
    adam: AdamState = field(default_factory=AdamState)

    @classmethod
    def static(cls, value: float) -> AlphaSchedule:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"Static alpha must lie in [0, 1], got {value}")
        return cls(mode=AlphaMode.STATIC, value=float(value), beta=math.nan)

    @classmethod
    def learned(
        cls,
        mode: AlphaMode | str,
        beta_init: float | None = None,
        *,
        lr: float = 0.0002,
        beta1: float = 0.5,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> AlphaSchedule:
        mode = AlphaMode(mode)
        if not mode.learned:
            raise ValueError("Use AlphaSchedule.static for a fixed alpha")
        start = DEFAULT_BETA_INIT[mode] if beta_init is None else float(beta_init)
        if mode in NON_NEGATIVE_BETA_MODES and start < 0.0:
            raise ValueError(f"Initial beta for {mode.value} must be >= 0, got {start}")
        floor = -math.inf if mode is AlphaMode.IDENT else start
        return cls(
            mode=mode,
            beta=start,
            beta_floor=floor,
            adam=AdamState.for_params([np.zeros((1, 1))], lr=lr, beta1=beta1, beta2=beta2, eps=eps),
        )


def _alpha_of(mode: AlphaMode, beta: float) -> float:
    if mode is AlphaMode.SIGM:
        return 1.0 / (1.0 + math.exp(-beta)) if beta >= 0 else math.exp(beta) / (1.0 + math.exp(beta))
    if mode is AlphaMode.SOFT:
        return beta / (1.0 + abs(beta))
    if mode is AlphaMode.TANH:
        return math.tanh(beta)
    return beta


def alpha_value(s: AlphaSchedule) -> float:
    if s.mode is AlphaMode.STATIC:
        return s.value
    return _alpha_of(s.mode, s.beta)


def alpha_derivative(s: AlphaSchedule) -> float:
    if s.mode is AlphaMode.STATIC:
        raise StaticScheduleHasNoGradient("A static alpha has no beta to differentiate")
    if s.mode is AlphaMode.SIGM:
        sig = _alpha_of(AlphaMode.SIGM, s.beta)
        return sig * (1.0 - sig)
    if s.mode is AlphaMode.SOFT:
        return 1.0 / (1.0 + abs(s.beta)) ** 2
    if s.mode is AlphaMode.TANH:
        t = math.tanh(s.beta)
        return 1.0 - t * t
    return 1.0


def update_beta(s: AlphaSchedule, dloss_dalpha: float) -> AlphaSchedule:
    """Descend G's loss in beta by one Adam step, then clamp to the floor."""
    if s.mode is AlphaMode.STATIC:
        raise StaticScheduleHasNoGradient("Static alpha is not learned")
    if not math.isfinite(dloss_dalpha):
        raise NonFiniteGradient(f"dLoss/dalpha is not finite: {dloss_dalpha}")
    grad = np.array([[dloss_dalpha * alpha_derivative(s)]])
    holder = [np.array([[s.beta]])]
    adam_step(s.adam, holder, [grad], Direction.DESCEND)
    s.beta = max(float(holder[0][0, 0]), s.beta_floor)
    return s
