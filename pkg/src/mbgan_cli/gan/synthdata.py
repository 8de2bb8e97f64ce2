from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .ndcore import Matrix

SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True, slots=True)
class RingMixture:
    """Equal-weight isotropic Gaussians centred on a circle."""

    n_modes: int = 8
    radius: float = 2.0
    mode_std: float = 0.02

    def __post_init__(self) -> None:
        if self.n_modes < 1:
            raise ValueError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.mode_std <= 0:
            raise ValueError(f"mode_std must be > 0, got {self.mode_std}")

    @property
    def centers(self) -> Matrix:
        angles = 2.0 * math.pi * np.arange(self.n_modes) / self.n_modes
        return self.radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def sample_real(mix: RingMixture, n: int, rng: np.random.Generator) -> Matrix:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    modes = rng.integers(0, mix.n_modes, size=n)
    noise = rng.normal(0.0, mix.mode_std, size=(n, 2))
    return mix.centers[modes] + noise


def sample_latent(dim: int, n: int, rng: np.random.Generator) -> Matrix:
    if dim < 1 or n < 1:
        raise ValueError(f"dim and n must be >= 1, got dim={dim}, n={n}")
    return rng.standard_normal((n, dim))


def seeded_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for ``seed`` (any 64-bit value, signed or not) and an optional sub-stream."""
    entropy = int(seed) & SEED_MASK
    if not stream:
        return np.random.default_rng(entropy)
    return np.random.default_rng([entropy, *stream])
