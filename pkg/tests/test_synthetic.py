import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernelkernel.synthetic import (
    BetaTask,
    GaussianTask,
    TaskCounts,
    add_noise,
    beta_skewness,
    derive_seed,
    marginal_entropy,
    rotated_covariance,
    sample_beta,
    sample_rotated_gaussian,
    splitmix64,
)

# closed form evaluated with mpmath at 40 digits
SKEW_20_3 = -0.8601395235657991783
HALF_LOG_2PIE = 1.4189385332046727418


def test_skewness_examples():
    assert beta_skewness(3, 3) == 0.0
    assert beta_skewness(20, 3) == pytest.approx(SKEW_20_3, rel=1e-14)
    assert beta_skewness(5, 2) == -beta_skewness(2, 5)
    with pytest.raises(ValueError):
        beta_skewness(0, 1)


@given(st.floats(1e-3, 1e3))
def test_symmetric_beta_has_zero_skew(a):
    assert beta_skewness(a, a) == 0.0


def test_sample_beta_support_and_determinism():
    bag = sample_beta(4.0, 3.0, 500, 1)
    assert bag.n == 500 and bag.k == 1
    assert np.all((bag.points > 0) & (bag.points < 1))
    np.testing.assert_array_equal(bag.points, sample_beta(4.0, 3.0, 500, 1).points)
    with pytest.raises(ValueError):
        sample_beta(-1, 3, 10, 0)


def test_sample_beta_uniform_mean():
    n = 100_000
    x = sample_beta(1.0, 1.0, n, 2).points[:, 0]
    assert abs(x.mean() - 0.5) <= 3 / math.sqrt(12 * n)


def test_sample_beta_skewness_monte_carlo():
    x = sample_beta(5.0, 3.0, 100_000, 3).points[:, 0]
    c = x - x.mean()
    skew = np.mean(c**3) / np.mean(c**2) ** 1.5
    assert abs(skew - beta_skewness(5, 3)) <= 0.03


def test_entropy_examples():
    eye = np.eye(2)
    for alpha in (0.0, 0.3, 2.0):
        assert marginal_entropy(eye, alpha) == pytest.approx(HALF_LOG_2PIE, rel=1e-14)
    d = np.diag([4.0, 1.0])
    assert marginal_entropy(d, 0.0) == pytest.approx(0.5 * math.log(2 * math.pi * math.e * 4))
    assert marginal_entropy(d, math.pi / 2) == pytest.approx(0.5 * math.log(2 * math.pi * math.e))
    with pytest.raises(ValueError):
        marginal_entropy(np.array([[1.0, 2.0], [2.0, 1.0]]), 0.0)


@settings(max_examples=100)
@given(st.floats(0, 2 * math.pi), st.floats(0.1, 3), st.floats(0.1, 3), st.floats(-0.9, 0.9))
def test_entropy_matches_matrix_and_is_pi_periodic(alpha, s1, s2, rho):
    sigma = np.array([[s1, rho * math.sqrt(s1 * s2)], [rho * math.sqrt(s1 * s2), s2]])
    m11 = rotated_covariance(sigma, alpha)[0, 0]
    assert marginal_entropy(sigma, alpha) == pytest.approx(0.5 * math.log(2 * math.pi * math.e * m11), rel=1e-12)
    assert marginal_entropy(sigma, alpha + math.pi) == pytest.approx(marginal_entropy(sigma, alpha), rel=1e-12)


def test_gaussian_moments():
    x = sample_rotated_gaussian(np.eye(2), 0.0, 100_000, 4).points
    assert np.all((x.var(axis=0) >= 0.98) & (x.var(axis=0) <= 1.02))
    y = sample_rotated_gaussian(np.diag([4.0, 1.0]), 0.0, 100_000, 5).points
    assert 3.8 <= np.cov(y.T)[0, 0] <= 4.2


@pytest.mark.parametrize("seed", range(5))
def test_gaussian_mean_bound(seed):
    sigma = np.array([[2.0, 0.3], [0.3, 0.5]])
    n = 500
    x = sample_rotated_gaussian(sigma, 1.1, n, seed).points
    trace = np.trace(rotated_covariance(sigma, 1.1))
    assert np.linalg.norm(x.mean(axis=0)) <= 4 * math.sqrt(trace / n)


def test_gaussian_determinism():
    a = sample_rotated_gaussian(np.eye(2), 0.4, 50, 9).points
    np.testing.assert_array_equal(a, sample_rotated_gaussian(np.eye(2), 0.4, 50, 9).points)


def test_noise():
    assert add_noise(3.25, 0.0, 1) == 3.25
    vals = np.array([add_noise(0.0, 1.0, s) for s in range(100_000)])
    assert abs(vals.mean()) <= 0.02
    assert all(4.9 <= add_noise(5.0, 0.1, s) <= 5.1 for s in range(1000))
    with pytest.raises(ValueError):
        add_noise(1.0, -0.1, 0)


def test_seed_derivation():
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert derive_seed(0, 5) == splitmix64(5)
    assert derive_seed(7, 5) == 7 ^ splitmix64(5)


def test_beta_task_defaults():
    data = BetaTask(n_per_bag=20).generate(0)
    assert len(data.bags) == 325 and data.k == 1
    assert [data.split.count(s) for s in ("train", "val", "test")] == [250, 25, 50]
    assert np.all((data.covariate >= 3) & (data.covariate <= 20))
    np.testing.assert_allclose(data.y, [beta_skewness(a, 3) for a in data.covariate])


def test_gaussian_task_defaults():
    data = GaussianTask(n_per_bag=20).generate(0)
    assert len(data.bags) == 325 and data.k == 2
    np.testing.assert_allclose(data.covariate, np.arange(1, 326) * math.pi / 325)


def test_counts_validated():
    with pytest.raises(ValueError):
        TaskCounts(10, 0, 5)
