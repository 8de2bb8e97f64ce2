from __future__ import annotations

import math

import numpy as np
import pytest

from mbgan_cli.gan.metrics import (
    EmptySequence,
    GaussianMoments,
    MetricsRecord,
    NonPSDCovariance,
    TooFewSamples,
    cumulative_intra_fid,
    cumulative_mode_entropy,
    fit_moments,
    frechet_distance,
    intra_fid,
    mean_min_fid,
    mode_coverage,
    mode_entropy,
    sqrtm_psd_2x2,
    trace_sqrt_product,
)
from mbgan_cli.gan.synthdata import RingMixture


def _moments(mean, cov) -> GaussianMoments:
    return GaussianMoments(mean=np.asarray(mean, dtype=float), cov=np.asarray(cov, dtype=float), n=100)


def _record(iteration: int, intra: float = 0.0, fid: float = math.nan, shares=()) -> MetricsRecord:
    return MetricsRecord(
        iteration=iteration,
        alpha=0.0,
        beta=math.nan,
        intra_fid=intra,
        fid_to_real=fid,
        modes_captured=0,
        hq_fraction=0.0,
        g_loss=0.0,
        per_mode_share=list(shares),
    )


def _random_psd(rng: np.random.Generator) -> np.ndarray:
    low = rng.normal(size=(2, 2))
    return low @ low.T


def _eigh_sqrt(m: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(m)
    return vectors @ np.diag(np.sqrt(np.clip(values, 0.0, None))) @ vectors.T


def test_fit_moments_two_points():
    moments = fit_moments(np.array([[0.0, 0.0], [2.0, 0.0]]))
    np.testing.assert_allclose(moments.mean, [1.0, 0.0])
    np.testing.assert_allclose(moments.cov, [[2.0, 0.0], [0.0, 0.0]])


def test_fit_moments_identical_points():
    moments = fit_moments(np.tile([[1.5, -0.5]], (10, 1)))
    np.testing.assert_array_equal(moments.cov, np.zeros((2, 2)))


def test_fit_moments_recovers_gaussian():
    mean = np.array([1.0, -2.0])
    cov = np.array([[2.0, 0.5], [0.5, 1.0]])
    samples = np.random.default_rng(0).multivariate_normal(mean, cov, size=100_000)
    moments = fit_moments(samples)
    np.testing.assert_allclose(moments.mean, mean, atol=0.02 * 2.0)
    np.testing.assert_allclose(moments.cov, cov, atol=0.02 * 2.0)


def test_fit_moments_needs_two_samples():
    with pytest.raises(TooFewSamples):
        fit_moments(np.ones((1, 2)))


def test_frechet_identity_cases():
    assert frechet_distance(_moments([0, 0], np.eye(2)), _moments([0, 0], np.eye(2))) == pytest.approx(0.0, abs=1e-12)
    assert frechet_distance(_moments([0, 0], np.eye(2)), _moments([3, 4], np.eye(2))) == pytest.approx(25.0, abs=1e-9)
    assert frechet_distance(
        _moments([0, 0], np.zeros((2, 2))), _moments([0, 0], np.eye(2))
    ) == pytest.approx(2.0, abs=1e-12)
    assert frechet_distance(
        _moments([0, 0], np.eye(2)), _moments([0, 0], 4.0 * np.eye(2))
    ) == pytest.approx(2.0, abs=1e-12)
    assert frechet_distance(
        _moments([0, 0], np.diag([4.0, 1.0])), _moments([0, 0], np.eye(2))
    ) == pytest.approx(1.0, abs=1e-9)


def test_frechet_symmetric_and_nonnegative():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a = _moments(rng.normal(size=2), _random_psd(rng))
        b = _moments(rng.normal(size=2), _random_psd(rng))
        forward, backward = frechet_distance(a, b), frechet_distance(b, a)
        assert forward >= 0.0
        assert forward == pytest.approx(backward, abs=1e-9)


def test_frechet_shift_adds_squared_norm():
    rng = np.random.default_rng(4)
    for _ in range(50):
        cov = _random_psd(rng)
        shift = rng.normal(size=2)
        value = frechet_distance(_moments([0, 0], cov), _moments(shift, cov))
        assert value == pytest.approx(float(shift @ shift), abs=1e-9)


def test_sqrtm_matches_eigendecomposition():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        a, b = _random_psd(rng), _random_psd(rng)
        root_a = sqrtm_psd_2x2(a)
        middle = root_a @ b @ root_a
        middle = 0.5 * (middle + middle.T)
        root = sqrtm_psd_2x2(middle)
        np.testing.assert_allclose(root @ root, middle, atol=1e-9 * max(1.0, np.abs(middle).max()))
        np.testing.assert_allclose(root, _eigh_sqrt(middle), atol=1e-9 * max(1.0, np.abs(root).max()))
        assert trace_sqrt_product(a, b) == pytest.approx(np.trace(_eigh_sqrt(middle)), abs=1e-9 * max(1.0, np.trace(root)))


def test_frechet_rejects_non_psd():
    with pytest.raises(NonPSDCovariance):
        frechet_distance(_moments([0, 0], [[1.0, 0.0], [0.0, -1.0]]), _moments([0, 0], np.eye(2)))


def test_intra_fid_collapsed_is_zero():
    samples = np.tile([[0.3, -0.7]], (200, 1))
    assert intra_fid(samples, 100, np.random.default_rng(0)) == pytest.approx(0.0, abs=1e-12)


def test_intra_fid_single_gaussian_is_small():
    samples = np.random.default_rng(1).normal(size=(20_000, 2))
    assert intra_fid(samples, 10_000, np.random.default_rng(2)) < 0.01


def test_intra_fid_needs_two_subsets():
    with pytest.raises(TooFewSamples):
        intra_fid(np.ones((10, 2)), 6, np.random.default_rng(0))


def test_cumulative_intra_fid():
    assert cumulative_intra_fid([]) == 0.0
    records = [_record(i, intra=0.25) for i in range(4)]
    assert cumulative_intra_fid(records) == pytest.approx(1.0)


def test_mean_min_fid():
    records = [_record(1, fid=2.0), _record(2, fid=4.0), _record(3, fid=6.0)]
    assert mean_min_fid(records) == (4.0, 2.0)
    assert mean_min_fid([_record(1, fid=3.0)]) == (3.0, 3.0)
    assert mean_min_fid([_record(1, fid=math.nan), _record(2, fid=1.0)]) == (1.0, 1.0)
    with pytest.raises(EmptySequence):
        mean_min_fid([])


def test_mode_coverage_at_centers():
    mix = RingMixture()
    coverage = mode_coverage(np.repeat(mix.centers, 10, axis=0), mix)
    assert coverage.modes_captured == 8
    assert coverage.hq_fraction == 1.0
    np.testing.assert_allclose(coverage.per_mode_share, 0.125)


def test_mode_coverage_at_origin():
    coverage = mode_coverage(np.zeros((50, 2)), RingMixture())
    assert coverage.modes_captured == 0
    assert coverage.hq_fraction == 0.0


def test_mode_coverage_single_mode():
    mix = RingMixture()
    coverage = mode_coverage(np.repeat(mix.centers[:1], 30, axis=0), mix)
    assert coverage.modes_captured == 1
    assert coverage.hq_fraction == 1.0


def test_mode_shares_sum_to_hq_fraction():
    mix = RingMixture()
    samples = np.random.default_rng(6).normal(scale=2.0, size=(5000, 2))
    samples[:2000] = mix.centers[np.arange(2000) % 8] + 0.01 * np.random.default_rng(7).normal(size=(2000, 2))
    coverage = mode_coverage(samples, mix)
    assert float(np.sum(coverage.per_mode_share)) == pytest.approx(coverage.hq_fraction, abs=1e-12)
    assert 0.0 <= coverage.hq_fraction <= 1.0
    assert 0 <= coverage.modes_captured <= 8


def test_mode_entropy():
    assert mode_entropy([0.125] * 8) == pytest.approx(math.log(8.0))
    assert mode_entropy([0.4, 0, 0, 0]) == 0.0
    assert mode_entropy([0.0] * 8) == 0.0
    records = [_record(1, shares=[0.5, 0.5]), _record(2, shares=[1.0, 0.0])]
    assert cumulative_mode_entropy(records) == pytest.approx(math.log(2.0))
