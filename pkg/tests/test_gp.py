import math

import numpy as np
import pytest

from cloudtuner.gp import (
    JITTER,
    LENGTH_SCALE_GRID,
    expected_improvement,
    fit_gp,
    matern52,
)


@pytest.fixture
def fitted(rng):
    x = rng.normal(size=(25, 4))
    y = np.sin(x[:, 0]) + 0.3 * x[:, 1] ** 2 + rng.normal(scale=0.01, size=25)
    return x, y, fit_gp(x, y)


def test_kernel_at_zero_is_signal_variance():
    for var in (0.3, 1.0, 4.2):
        for ls in LENGTH_SCALE_GRID:
            assert matern52(np.array([0.0]), ls, var)[0] == pytest.approx(var)


def test_kernel_strictly_decreasing():
    radii = np.linspace(0.0, 8.0, 100)
    for ls in (0.3, 1.0, 3.0):
        k = matern52(radii, ls, 2.0)
        assert np.all(np.diff(k) < 0)


def test_kernel_formula_spot_check():
    # independent evaluation of s2*(1+q+q^2/3)exp(-q) at q = sqrt(5)*r/l
    r, ls, var = 0.7, 1.3, 2.5
    q = math.sqrt(5) * r / ls
    expected = var * (1 + q + q * q / 3) * math.exp(-q)
    assert matern52(np.array([r]), ls, var)[0] == pytest.approx(expected, rel=1e-12)


def test_posterior_interpolates_training_points(fitted):
    x, y, gp = fitted
    mu, var = gp.posterior(x)
    assert np.max(np.abs(mu - y)) < 1e-4
    assert np.all(var < 1e-4)


def test_ei_at_training_points_negligible(fitted):
    x, y, gp = fitted
    mu, var = gp.posterior(x)
    ei = expected_improvement(mu, np.sqrt(var), float(y.min()))
    assert np.all(ei <= 1e-6)


def test_ei_formula_spot_check():
    # hand evaluation of (best-mu)*Phi(z) + sigma*phi(z)
    mu, sigma, best = 1.0, 0.5, 1.2
    z = (best - mu) / sigma
    phi = math.exp(-z * z / 2) / math.sqrt(2 * math.pi)
    cdf = 0.5 * (1 + math.erf(z / math.sqrt(2)))
    expected = (best - mu) * cdf + sigma * phi
    got = expected_improvement(np.array([mu]), np.array([sigma]), best)[0]
    assert got == pytest.approx(expected, rel=1e-12)


def test_ei_zero_variance_is_zero():
    # a point with no posterior uncertainty is already known: nothing to gain
    ei = expected_improvement(np.array([2.0, 0.5]), np.array([0.0, 0.0]), 1.0)
    assert ei.tolist() == [0.0, 0.0]


def test_ei_nonnegative(rng):
    mu = rng.normal(size=200)
    sigma = np.abs(rng.normal(size=200))
    assert np.all(expected_improvement(mu, sigma, 0.0) >= 0)


def test_length_scale_chosen_from_grid(fitted):
    _, _, gp = fitted
    assert gp.length_scale in LENGTH_SCALE_GRID


def test_signal_variance_is_sample_variance(fitted):
    x, y, gp = fitted
    assert gp.signal_var == pytest.approx(np.var(y, ddof=1))


def test_fit_handles_constant_targets(rng):
    x = rng.normal(size=(6, 2))
    y = np.full(6, 3.0)
    gp = fit_gp(x, y)
    mu, var = gp.posterior(x)
    assert mu == pytest.approx(np.full(6, 3.0), abs=1e-6)


def test_jitter_is_fixed():
    assert JITTER == 1e-6
