"""Smoothing kernels for density estimation and the outer regression kernel.

Smoothing kernels are one-dimensional radial profiles ``B(u)`` supported on
``|u| <= 1``. In ``k`` dimensions they are applied to ``||x|| / b`` and
rescaled by :meth:`SmoothingKernel.normalizer` so the ``k``-dimensional
integral is one.

The regression kernel ``K`` acts on nonnegative distances and carries the
box and Lipschitz constants that the estimator's risk analysis relies on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SMOOTHING_FAMILIES = ("epanechnikov", "triangle", "boxcar")
REGRESSION_FAMILIES = ("triangle",)

# integer codes shared with the compiled KDE kernel
FAMILY_CODES = {"epanechnikov": 0, "triangle": 1, "boxcar": 2}

_RADIAL_CELLS = 200_000


def _profile(family: str, u):
    u = np.abs(np.asarray(u, dtype=float))
    inside = u <= 1.0
    if family == "epanechnikov":
        out = 0.75 * (1.0 - u * u)
    elif family == "triangle":
        out = 1.0 - u
    elif family == "boxcar":
        out = np.full_like(u, 0.5)
    else:
        raise ValueError(f"unknown smoothing family {family!r}")
    return np.where(inside, out, 0.0)


@lru_cache(maxsize=None)
def _radial_normalizer(family: str, k: int) -> float:
    # midpoint rule for  S_{k-1} * int_0^1 r^(k-1) B(r) dr
    step = 1.0 / _RADIAL_CELLS
    r = (np.arange(_RADIAL_CELLS) + 0.5) * step
    sphere = 2.0 * math.pi ** (k / 2.0) / math.gamma(k / 2.0)
    mass = sphere * float(np.sum(r ** (k - 1) * _profile(family, r))) * step
    return 1.0 / mass


@dataclass(frozen=True)
class SmoothingKernel:
    """Compactly supported kernel ``B`` used inside the density estimator."""

    family: str = "epanechnikov"
    support_radius: float = 1.0

    def __post_init__(self):
        if self.family not in SMOOTHING_FAMILIES:
            raise ValueError(
                f"unknown smoothing family {self.family!r}; "
                f"expected one of {SMOOTHING_FAMILIES}"
            )
        if self.support_radius != 1.0:
            raise ValueError("only the canonical support radius 1 is supported")

    @property
    def code(self) -> int:
        return FAMILY_CODES[self.family]

    def __call__(self, u):
        return eval_smoothing(self, u)

    def normalizer(self, k: int) -> float:
        """Constant ``c`` such that ``c * B(||x||)`` integrates to one on R^k.

        For ``k = 1`` the canonical profiles already integrate to one and
        the rectangle-rule estimate differs from 1 only by quadrature error.
        """
        if k < 1:
            raise ValueError("dimension must be positive")
        if k == 1:
            return 1.0
        return _radial_normalizer(self.family, int(k))


def eval_smoothing(kernel: SmoothingKernel, u):
    """Evaluate the smoothing profile ``B(u)``; zero when ``|u| > 1``."""
    out = _profile(kernel.family, u)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class RegressionKernel:
    """Outer kernel ``K`` on ``[0, inf)`` with its declared box/Lipschitz constants.

    The declared constants must satisfy
    ``lower * 1{x < r} <= K(x) <= 1{x <= R}`` and
    ``|K(x) - K(y)| <= lipschitz * |x - y|``; :func:`verify_a2` checks both.
    """

    family: str = "triangle"
    lipschitz: float = 1.0
    lower: float = 0.5
    r: float = 0.5
    R: float = 1.0

    def __post_init__(self):
        if self.family not in REGRESSION_FAMILIES:
            raise ValueError(
                f"unknown regression family {self.family!r}; "
                f"expected one of {REGRESSION_FAMILIES}"
            )
        if not 0.0 < self.lower < 1.0:
            raise ValueError("lower box constant must lie in (0, 1)")
        if not 0.0 < self.r < self.R:
            raise ValueError("box radii must satisfy 0 < r < R")
        if self.lipschitz <= 0:
            raise ValueError("Lipschitz constant must be positive")

    def __call__(self, x):
        return eval_regression(self, x)


def _triangle_weights(x: np.ndarray) -> np.ndarray:
    return np.where(x < 1.0, 1.0 - x, 0.0)


def eval_regression(kernel: RegressionKernel, x):
    """Evaluate ``K(x)`` for ``x >= 0``. Negative arguments raise ``ValueError``."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("regression kernel is defined for nonnegative arguments only")
    out = _triangle_weights(arr)
    return float(out) if out.ndim == 0 else out


@dataclass
class A2Report:
    max_lipschitz_ratio: float
    lower_box_violations: int
    upper_box_violations: int
    lipschitz_violations: int
    violating_points: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return (
            self.lower_box_violations
            + self.upper_box_violations
            + self.lipschitz_violations
        )

    @property
    def ok(self) -> bool:
        return self.violations == 0


def verify_a2(kernel: RegressionKernel, samples: int = 100_000, slack: float = 1e-12) -> A2Report:
    """Check the box and Lipschitz inequalities on a dense grid over ``[0, 2R]``.

    The grid always contains ``0``, ``r`` and ``R`` so the boundary values
    are checked exactly.
    """
    if samples < 2:
        raise ValueError("need at least two sample points")
    span = 2.0 * max(kernel.R, kernel.r)
    xs = np.unique(np.concatenate([np.linspace(0.0, span, samples), [0.0, kernel.r, kernel.R]]))
    ks = eval_regression(kernel, xs)

    lower = kernel.lower * (xs < kernel.r)
    upper = (xs <= kernel.R).astype(float)
    low_bad = ks < lower - slack
    up_bad = ks > upper + slack

    dk = np.abs(np.diff(ks))
    dx = np.diff(xs)
    ratios = dk / dx
    max_ratio = float(ratios.max()) if ratios.size else 0.0
    lip_bad = dk > kernel.lipschitz * dx * (1.0 + 1e-9) + slack

    bad_points = sorted(set(xs[low_bad | up_bad].tolist()))
    return A2Report(
        max_lipschitz_ratio=max_ratio,
        lower_box_violations=int(low_bad.sum()),
        upper_box_violations=int(up_bad.sum()),
        lipschitz_violations=int(lip_bad.sum()),
        violating_points=bad_points[:20],
    )
