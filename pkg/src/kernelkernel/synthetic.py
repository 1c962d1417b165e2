"""Synthetic distribution-regression tasks with known ground truth.

Two tasks are provided:

* Beta skewness: bags from ``Beta(a, 3)`` with ``a ~ U[3, 20]``, response the
  skewness of the generating Beta law.
* Rotated-Gaussian entropy: bags from ``N(0, M_i)`` with
  ``M_i = R(alpha_i) Sigma R(alpha_i)^T``, ``alpha_i = i*pi/N``, response the
  differential entropy of the first marginal.

Seeding
-------
Every random draw comes from ``numpy.random.PCG64`` seeded with
``derive_seed(master, index) = master XOR splitmix64(index)``. Bag ``i``
uses ``index = i``; task-level draws use the reserved indices in
``STREAM_*`` so they never collide with bag streams.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import SampleBag
from .regressor import LabeledBag

MASK64 = (1 << 64) - 1

STREAM_PARAMS = 1 << 40
STREAM_SPLIT = (1 << 40) + 1
STREAM_NOISE = (1 << 40) + 2
STREAM_COVARIANCE = (1 << 40) + 3


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    return (int(master) & MASK64) ^ splitmix64(int(index) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


# -- Beta skewness -------------------------------------------------------

def beta_skewness(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise ValueError("Beta parameters must be positive")
    return 2.0 * (b - a) * math.sqrt(a + b + 1.0) / ((a + b + 2.0) * math.sqrt(a * b))


def sample_beta(a: float, b: float, n: int, seed: int) -> SampleBag:
    """``n`` Beta(a, b) draws as ``G_a / (G_a + G_b)`` with independent Gammas.

    The Gamma variates come from numpy's ``standard_gamma`` (Marsaglia-Tsang
    squeeze/rejection for shape >= 1, with the usual boost for shape < 1).
    """
    if not (a > 0 and b > 0):
        raise ValueError("Beta parameters must be positive")
    if n < 1:
        raise ValueError("n must be positive")
    rng = make_rng(seed)
    ga = rng.standard_gamma(a, n)
    gb = rng.standard_gamma(b, n)
    x = ga / (ga + gb)
    # keep the support open when a Gamma underflows to zero
    x = np.clip(x, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    return SampleBag(x[:, None])


# -- rotated Gaussian entropy ---------------------------------------------

def rotation(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]])


def _check_spd(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2, 2):
        raise ValueError("covariance must be 2x2")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12 * max(1.0, np.abs(sigma).max())):
        raise ValueError("covariance must be symmetric")
    if np.linalg.eigvalsh(sigma).min() <= 0:
        raise ValueError("covariance must be positive definite")
    return sigma


def rotated_covariance(sigma, alpha: float) -> np.ndarray:
    rot = rotation(alpha)
    m = rot @ np.asarray(sigma, dtype=float) @ rot.T
    return 0.5 * (m + m.T)


def marginal_entropy(sigma, alpha: float) -> float:
    """Entropy ``0.5 * ln(2 pi e M11)`` of the first coordinate of ``N(0, M)``."""
    sigma = _check_spd(sigma)
    c, s = math.cos(alpha), math.sin(alpha)
    # first row of R Sigma R^T, written out so alpha and alpha + pi agree exactly
    m11 = c * c * sigma[0, 0] - 2.0 * c * s * sigma[0, 1] + s * s * sigma[1, 1]
    return 0.5 * math.log(2.0 * math.pi * math.e * m11)


def sample_rotated_gaussian(sigma, alpha: float, n: int, seed: int) -> SampleBag:
    """``n`` draws of ``L z`` with ``L`` the Cholesky factor of ``R Sigma R^T``."""
    sigma = _check_spd(sigma)
    if n < 1:
        raise ValueError("n must be positive")
    chol = np.linalg.cholesky(rotated_covariance(sigma, alpha))
    z = make_rng(seed).standard_normal((n, 2))
    return SampleBag(z @ chol.T)


def random_covariance(seed: int) -> np.ndarray:
    """``A A^T`` with ``A_ij ~ U[0, 1]``, redrawn until comfortably nonsingular."""
    rng = make_rng(seed)
    while True:
        a = rng.random((2, 2))
        sigma = a @ a.T
        if np.linalg.eigvalsh(sigma).min() > 1e-3:
            return sigma


# -- noise ----------------------------------------------------------------

def add_noise(y: float, sigma: float, seed: int) -> float:
    """``y + U[-sigma, sigma]``; ``sigma == 0`` returns ``y`` untouched."""
    if sigma < 0:
        raise ValueError("noise level must be nonnegative")
    if sigma == 0:
        return y
    return float(y + make_rng(seed).uniform(-sigma, sigma))


# -- task generators ------------------------------------------------------

@dataclass(frozen=True)
class TaskCounts:
    train: int = 250
    val: int = 25
    test: int = 50

    def __post_init__(self):
        if min(self.train, self.val, self.test) < 1:
            raise ValueError("train, validation and test counts must all be at least 1")

    @property
    def total(self) -> int:
        return self.train + self.val + self.test


@dataclass
class Dataset:
    """Bags with responses, the covariate behind each bag, and the split."""

    bags: list
    y: np.ndarray
    covariate: np.ndarray
    split: list
    k: int
    task: str

    def subset(self, name: str) -> list:
        return [LabeledBag(self.bags[i], float(self.y[i]))
                for i, s in enumerate(self.split) if s == name]

    def indices(self, name: str) -> list:
        return [i for i, s in enumerate(self.split) if s == name]


def _split_labels(counts: TaskCounts, master: int) -> list:
    perm = make_rng(derive_seed(master, STREAM_SPLIT)).permutation(counts.total)
    labels = [""] * counts.total
    for rank, i in enumerate(perm):
        if rank < counts.train:
            labels[i] = "train"
        elif rank < counts.train + counts.val:
            labels[i] = "val"
        else:
            labels[i] = "test"
    return labels


def _noisy(y: np.ndarray, sigma: float, master: int) -> np.ndarray:
    if sigma == 0:
        return y
    base = derive_seed(master, STREAM_NOISE)
    return np.array([add_noise(float(v), sigma, derive_seed(base, i)) for i, v in enumerate(y)])


@dataclass(frozen=True)
class BetaTask:
    a_range: tuple = (3.0, 20.0)
    b_fixed: float = 3.0
    n_per_bag: int = 500
    counts: TaskCounts = TaskCounts()

    def generate(self, master: int, noise: float = 0.0) -> Dataset:
        lo, hi = self.a_range
        a = make_rng(derive_seed(master, STREAM_PARAMS)).uniform(lo, hi, self.counts.total)
        bags = [sample_beta(float(ai), self.b_fixed, self.n_per_bag, derive_seed(master, i))
                for i, ai in enumerate(a)]
        y = np.array([beta_skewness(float(ai), self.b_fixed) for ai in a])
        return Dataset(bags, _noisy(y, noise, master), a, _split_labels(self.counts, master),
                       1, "beta-skewness")


@dataclass(frozen=True)
class GaussianTask:
    n_per_bag: int = 500
    counts: TaskCounts = TaskCounts()

    def generate(self, master: int, noise: float = 0.0) -> Dataset:
        sigma = random_covariance(derive_seed(master, STREAM_COVARIANCE))
        total = self.counts.total
        alphas = np.array([i * math.pi / total for i in range(1, total + 1)])
        bags = [sample_rotated_gaussian(sigma, float(al), self.n_per_bag, derive_seed(master, i))
                for i, al in enumerate(alphas)]
        y = np.array([marginal_entropy(sigma, float(al)) for al in alphas])
        return Dataset(bags, _noisy(y, noise, master), alphas, _split_labels(self.counts, master),
                       2, "gauss-entropy")
