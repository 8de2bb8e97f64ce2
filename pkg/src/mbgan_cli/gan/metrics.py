from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Sequence

import numpy as np

from .ndcore import Matrix
from .synthdata import RingMixture

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10

DEFAULT_HQ_THRESHOLD_STDS = 3.0
DEFAULT_CAPTURE_SHARE = 0.01


class TooFewSamples(ValueError):
    pass


class NonPSDCovariance(ValueError):
    pass


class EmptySequence(ValueError):
    pass


@dataclass(slots=True)
class GaussianMoments:
    mean: np.ndarray
    cov: np.ndarray
    n: int


@dataclass(slots=True)
class MetricsRecord:
    iteration: int
    alpha: float
    beta: float
    intra_fid: float
    fid_to_real: float
    modes_captured: int
    hq_fraction: float
    g_loss: float
    d_losses: list[float] = field(default_factory=list)
    per_mode_share: list[float] = field(default_factory=list)

    @property
    def d_loss_mean(self) -> float:
        return float(np.mean(self.d_losses)) if self.d_losses else math.nan


@dataclass(slots=True)
class ModeCoverage:
    modes_captured: int
    hq_fraction: float
    per_mode_share: np.ndarray


def fit_moments(samples: Matrix) -> GaussianMoments:
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise TooFewSamples(f"Need at least 2 samples to fit moments, got shape {samples.shape}")
    mean = samples.mean(axis=0)
    centered = samples - mean
    cov = centered.T @ centered / (samples.shape[0] - 1)
    return GaussianMoments(mean=mean, cov=0.5 * (cov + cov.T), n=int(samples.shape[0]))


def _eigvals_2x2(m: np.ndarray) -> tuple[float, float]:
    half_trace = 0.5 * (m[0, 0] + m[1, 1])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = math.sqrt(max(half_trace * half_trace - det, 0.0))
    return half_trace - disc, half_trace + disc


def _check_psd(cov: np.ndarray, label: str) -> None:
    if cov.shape != (2, 2):
        raise NonPSDCovariance(f"{label} covariance must be 2x2, got {cov.shape}")
    scale = max(1.0, float(np.max(np.abs(cov))))
    if abs(cov[0, 1] - cov[1, 0]) > SYMMETRY_TOL * scale:
        raise NonPSDCovariance(f"{label} covariance is not symmetric")
    low, _ = _eigvals_2x2(cov)
    if low < -PSD_TOL * scale:
        raise NonPSDCovariance(f"{label} covariance has negative eigenvalue {low:.3e}")


def sqrtm_psd_2x2(m: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric PSD 2x2 matrix.

    Uses sqrt(M) = (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M)).
    """
    det = max(float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]), 0.0)
    s = math.sqrt(det)
    t = float(m[0, 0] + m[1, 1]) + 2.0 * s
    if t <= 0.0:
        return np.zeros((2, 2))
    return (m + s * np.eye(2)) / math.sqrt(t)


def trace_sqrt_product(cov_a: np.ndarray, cov_b: np.ndarray) -> float:
    """Tr((cov_a cov_b)^(1/2)) through the symmetric form A^(1/2) B A^(1/2)."""
    root_a = sqrtm_psd_2x2(cov_a)
    middle = root_a @ cov_b @ root_a
    middle = 0.5 * (middle + middle.T)
    det = max(float(middle[0, 0] * middle[1, 1] - middle[0, 1] * middle[1, 0]), 0.0)
    tr = max(float(middle[0, 0] + middle[1, 1]), 0.0)
    return math.sqrt(tr + 2.0 * math.sqrt(det))


def frechet_distance(a: GaussianMoments, b: GaussianMoments) -> float:
    _check_psd(a.cov, "first")
    _check_psd(b.cov, "second")
    diff = a.mean - b.mean
    # average both orderings so the result is symmetric to rounding
    cross = 0.5 * (trace_sqrt_product(a.cov, b.cov) + trace_sqrt_product(b.cov, a.cov))
    value = float(diff @ diff) + float(np.trace(a.cov) + np.trace(b.cov)) - 2.0 * cross
    return max(value, 0.0)


def intra_fid(generated: Matrix, subset_size: int, rng: np.random.Generator) -> float:
    if subset_size < 2 or generated.shape[0] < 2 * subset_size:
        raise TooFewSamples(
            f"Intra FID needs two disjoint subsets of {subset_size}, have {generated.shape[0]} samples"
        )
    order = rng.permutation(generated.shape[0])
    first = generated[order[:subset_size]]
    second = generated[order[subset_size : 2 * subset_size]]
    return frechet_distance(fit_moments(first), fit_moments(second))


def cumulative_intra_fid(records: Sequence[MetricsRecord]) -> float:
    return float(sum(r.intra_fid for r in records))


def mean_min_fid(records: Sequence[MetricsRecord]) -> tuple[float, float]:
    values = [r.fid_to_real for r in records if not math.isnan(r.fid_to_real)]
    if not values:
        raise EmptySequence("No checkpoint carries a FID to the real data")
    return float(np.mean(values)), float(min(values))


def mode_coverage(
    generated: Matrix,
    mix: RingMixture,
    threshold_stds: float = DEFAULT_HQ_THRESHOLD_STDS,
    capture_share: float = DEFAULT_CAPTURE_SHARE,
) -> ModeCoverage:
    if threshold_stds <= 0:
        raise ValueError(f"threshold_stds must be > 0, got {threshold_stds}")
    n = generated.shape[0]
    if n == 0:
        return ModeCoverage(0, 0.0, np.zeros(mix.n_modes))
    deltas = generated[:, None, :] - mix.centers[None, :, :]
    dists = np.sqrt(np.sum(deltas * deltas, axis=2))
    nearest = np.argmin(dists, axis=1)
    high_quality = dists[np.arange(n), nearest] <= threshold_stds * mix.mode_std
    counts = np.bincount(nearest[high_quality], minlength=mix.n_modes)
    shares = counts / n
    return ModeCoverage(
        modes_captured=int(np.sum(shares >= capture_share)),
        hq_fraction=float(np.count_nonzero(high_quality) / n),
        per_mode_share=shares,
    )


def mode_entropy(per_mode_share: Sequence[float]) -> float:
    shares = np.asarray(per_mode_share, dtype=np.float64)
    total = shares.sum()
    if total <= 0:
        return 0.0
    p = shares[shares > 0] / total
    return float(-np.sum(p * np.log(p)))


def cumulative_mode_entropy(records: Sequence[MetricsRecord]) -> float:
    return float(sum(mode_entropy(r.per_mode_share) for r in records))
