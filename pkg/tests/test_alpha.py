from __future__ import annotations

import math

import numpy as np
import pytest

from mbgan_cli.gan.alpha import (
    STATIC_GRID,
    AlphaMode,
    AlphaSchedule,
    StaticScheduleHasNoGradient,
    alpha_derivative,
    alpha_value,
    update_beta,
)
from mbgan_cli.gan.models import NonFiniteGradient

BOUNDED = [AlphaMode.SIGM, AlphaMode.SOFT, AlphaMode.TANH]


def _at(mode: AlphaMode, beta: float) -> AlphaSchedule:
    return AlphaSchedule(mode=mode, beta=beta)


def test_values_at_zero():
    assert alpha_value(_at(AlphaMode.SIGM, 0.0)) == 0.5
    assert alpha_value(_at(AlphaMode.SOFT, 0.0)) == 0.0
    assert alpha_value(_at(AlphaMode.TANH, 0.0)) == 0.0
    assert alpha_value(_at(AlphaMode.IDENT, 0.0)) == 0.0


def test_default_sigmoid_start():
    schedule = AlphaSchedule.learned(AlphaMode.SIGM)
    assert schedule.beta == -1.8
    assert alpha_value(schedule) == pytest.approx(0.141851, abs=1e-6)


def test_derivatives_at_zero():
    assert alpha_derivative(_at(AlphaMode.SIGM, 0.0)) == 0.25
    assert alpha_derivative(_at(AlphaMode.SOFT, 0.0)) == 1.0
    assert alpha_derivative(_at(AlphaMode.TANH, 0.0)) == 1.0
    assert alpha_derivative(_at(AlphaMode.IDENT, 3.0)) == 1.0


@pytest.mark.parametrize("mode", list(AlphaMode)[1:])
@pytest.mark.parametrize("beta", [-2.0, -0.3, 0.1, 0.7, 2.5])
def test_derivative_matches_central_difference(mode: AlphaMode, beta: float):
    h = 1e-5
    numeric = (alpha_value(_at(mode, beta + h)) - alpha_value(_at(mode, beta - h))) / (2 * h)
    assert alpha_derivative(_at(mode, beta)) == pytest.approx(numeric, abs=1e-8)


@pytest.mark.parametrize("mode", BOUNDED)
def test_bounded_and_monotonic(mode: AlphaMode):
    betas = np.linspace(-50.0, 50.0, 1001)
    values = [alpha_value(_at(mode, float(b))) for b in betas]
    assert all(-1.0 <= v <= 1.0 for v in values)
    assert all(b > a for a, b in zip(values, values[1:]) if abs(b) < 1.0 - 1e-12)


@pytest.mark.parametrize("mode", BOUNDED)
def test_saturation(mode: AlphaMode):
    derivatives = [alpha_derivative(_at(mode, b)) for b in (1.0, 10.0, 100.0)]
    assert derivatives[0] > derivatives[1] > derivatives[2]
    assert derivatives[2] < 1e-3


@pytest.mark.parametrize("mode", [AlphaMode.SIGM, AlphaMode.TANH])
def test_fast_saturation_at_ten(mode: AlphaMode):
    assert alpha_derivative(_at(mode, 10.0)) < 1e-3


def test_ident_exceeds_one():
    assert alpha_value(_at(AlphaMode.IDENT, 1.5)) == 1.5


def test_update_beta_zero_gradient_keeps_beta():
    schedule = AlphaSchedule.learned(AlphaMode.SIGM, -1.8)
    update_beta(schedule, 0.0)
    assert schedule.beta == -1.8


def test_negative_loss_slope_increases_beta():
    schedule = AlphaSchedule.learned(AlphaMode.SIGM, -1.8)
    for _ in range(5):
        before = schedule.beta
        update_beta(schedule, -1.0)
        assert schedule.beta > before


def test_beta_clamped_at_floor():
    schedule = AlphaSchedule.learned(AlphaMode.SOFT, 0.0)
    update_beta(schedule, 2.0)
    assert schedule.beta == 0.0
    assert alpha_value(schedule) == 0.0


def test_ident_has_no_floor():
    schedule = AlphaSchedule.learned(AlphaMode.IDENT, 0.0)
    update_beta(schedule, 2.0)
    assert schedule.beta < 0.0


def test_static_schedule():
    schedule = AlphaSchedule.static(0.3)
    assert alpha_value(schedule) == 0.3
    assert math.isnan(schedule.beta)
    with pytest.raises(StaticScheduleHasNoGradient):
        alpha_derivative(schedule)
    with pytest.raises(StaticScheduleHasNoGradient):
        update_beta(schedule, -1.0)
    with pytest.raises(ValueError):
        AlphaSchedule.static(1.5)
    assert STATIC_GRID[0] == 0.0 and STATIC_GRID[-1] == 1.0 and len(STATIC_GRID) == 11


@pytest.mark.parametrize("mode", [AlphaMode.SOFT, AlphaMode.TANH])
def test_negative_start_rejected_where_alpha_would_go_negative(mode: AlphaMode):
    with pytest.raises(ValueError, match="must be >= 0"):
        AlphaSchedule.learned(mode, -0.5)


def test_non_finite_slope_is_rejected():
    schedule = AlphaSchedule.learned(AlphaMode.TANH, 0.0)
    with pytest.raises(NonFiniteGradient):
        update_beta(schedule, math.nan)
    assert schedule.beta == 0.0
