from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Any, Mapping

from .config import DEFAULT_CONFIG_VALUES
from .gan.alpha import STATIC_GRID

_TOY_BASE: Mapping[str, Any] = MappingProxyType(
    {
        "n_discriminators": 8,
        "batch_size": 512,
        "iterations": 25000,
        "latent_dim": 256,
        "g_hidden": [128, 128],
        "d_hidden": [128],
        "checkpoint_every": 1000,
        "save_every": 5000,
        "plot_every": 5000,
    }
)


@dataclass(frozen=True, slots=True)
class ExperimentPreset:
    name: str
    description: str
    variants: tuple[tuple[str, Mapping[str, Any]], ...]
    base: Mapping[str, Any] = _TOY_BASE
    alpha_evolution: bool = False

    def config_values(self, label: str, seed: int, iterations: int | None = None) -> dict[str, Any]:
        overrides = dict(self.variants)[label]
        values = {key: DEFAULT_CONFIG_VALUES[key] for key in DEFAULT_CONFIG_VALUES}
        values.update(self.base)
        values.update(overrides)
        values["name"] = f"{self.name}/{label}"
        values["seed"] = seed
        if iterations is not None:
            values["iterations"] = iterations
        return values

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.variants]


def _static(value: float) -> Mapping[str, Any]:
    return MappingProxyType({"alpha_mode": "static", "alpha_value": value})


def _learned(mode: str, beta_init: float | None = None, **extra: Any) -> Mapping[str, Any]:
    return MappingProxyType({"alpha_mode": mode, "beta_init": beta_init, **extra})


PRESETS: Mapping[str, ExperimentPreset] = MappingProxyType(
    {
        preset.name: preset
        for preset in (
            ExperimentPreset(
                name="toy",
                description="Eight discriminators with the sigmoid-scheduled alpha (beta starts at -1.8).",
                variants=(("alpha-sigm", _learned("sigm", -1.8)),),
            ),
            ExperimentPreset(
                name="static-alpha-sweep",
                description="Fixed alpha over the grid 0.0, 0.1, ..., 1.0.",
                variants=tuple((f"alpha-{v:.1f}", _static(v)) for v in STATIC_GRID),
            ),
            ExperimentPreset(
                name="alpha-fn-compare",
                description="Self-learned alpha through sigmoid, softsign and tanh.",
                variants=(
                    ("alpha-sigm", _learned("sigm", -1.8)),
                    ("alpha-soft", _learned("soft", 0.0)),
                    ("alpha-tanh", _learned("tanh", 0.0)),
                ),
                alpha_evolution=True,
            ),
            ExperimentPreset(
                name="beta-sigm-sweep",
                description="Sigmoid alpha with different initial beta values.",
                variants=tuple(
                    (f"beta-{b:+.1f}", _learned("sigm", b)) for b in (-3.0, -2.5, -2.0, -1.8, -1.0, 0.0)
                ),
                alpha_evolution=True,
            ),
            ExperimentPreset(
                name="alpha-ident",
                description="Unconstrained alpha (identity of beta); alpha grows past 1.",
                variants=(("alpha-ident", _learned("ident", 0.0)),),
                alpha_evolution=True,
            ),
            ExperimentPreset(
                name="discriminator-sweep",
                description="Sigmoid alpha with 1, 2, 4 and 8 discriminators at batch 512.",
                variants=tuple(
                    (f"k-{k}", _learned("sigm", -1.8, n_discriminators=k)) for k in (1, 2, 4, 8)
                ),
            ),
            ExperimentPreset(
                name="standard-gan",
                description="Single discriminator, alpha fixed at 0: the plain GAN baseline.",
                variants=(("baseline", MappingProxyType({"alpha_mode": "static", "alpha_value": 0.0, "n_discriminators": 1})),),
            ),
        )
    }
)


def get_preset(name: str) -> ExperimentPreset:
    key = name.strip().lower()
    if key not in PRESETS:
        raise KeyError(f"Unknown preset '{name}'. Available: {', '.join(PRESETS)}")
    return PRESETS[key]
