from __future__ import annotations

import numpy as np
import pytest

from mbgan_cli.gan.synthdata import RingMixture, sample_latent, sample_real


def test_centers_lie_on_circle():
    mix = RingMixture()
    radii = np.linalg.norm(mix.centers, axis=1)
    np.testing.assert_allclose(radii, 2.0, rtol=1e-12)
    np.testing.assert_allclose(mix.centers[0], [2.0, 0.0])
    np.testing.assert_allclose(mix.centers[2], [0.0, 2.0], atol=1e-12)


def test_equal_mode_shares_and_tight_modes():
    mix = RingMixture()
    samples = sample_real(mix, 80_000, np.random.default_rng(0))
    dists = np.linalg.norm(samples[:, None, :] - mix.centers[None, :, :], axis=2)
    nearest = np.argmin(dists, axis=1)
    shares = np.bincount(nearest, minlength=8) / samples.shape[0]
    np.testing.assert_allclose(shares, 0.125, atol=0.01)
    assert np.all(dists[np.arange(samples.shape[0]), nearest] < 5 * mix.mode_std)


def test_latent_is_standard_normal():
    z = sample_latent(1, 1_000_000, np.random.default_rng(1))
    assert z.shape == (1_000_000, 1)
    assert abs(float(z.mean())) < 0.01
    assert abs(float(z.var()) - 1.0) < 0.01


def test_sampling_is_deterministic():
    mix = RingMixture()
    a = sample_real(mix, 100, np.random.default_rng(5))
    b = sample_real(mix, 100, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        RingMixture(n_modes=0)
    with pytest.raises(ValueError):
        RingMixture(mode_std=0.0)
    with pytest.raises(ValueError):
        sample_real(RingMixture(), 0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_latent(0, 5, np.random.default_rng(0))
