"""Kernel density estimates on regular grids and distances between them.

All densities of one experiment share a :class:`GridSpec`; integrals are
midpoint (rectangle) rule sums over cell centers.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .kernels import SmoothingKernel

DISTANCES = ("l1", "l2")


class GridMismatchError(ValueError):
    """Two densities (or a bag and a grid) do not live on the same grid."""


class SampleBag:
    """An i.i.d. point set in R^k standing in for one unobserved distribution."""

    __slots__ = ("points",)

    def __init__(self, points):
        arr = np.array(points, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("a bag needs at least one point with at least one coordinate")
        if not np.all(np.isfinite(arr)):
            raise ValueError("bag coordinates must be finite")
        arr.setflags(write=False)
        self.points = arr

    @property
    def k(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return f"SampleBag(n={self.n}, k={self.k})"


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned regular grid; values live at cell centers."""

    lo: tuple
    hi: tuple
    cells: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        cells = tuple(int(v) for v in np.atleast_1d(self.cells))
        if not (len(lo) == len(hi) == len(cells)) or not lo:
            raise ValueError("lo, hi and cells must have one entry per dimension")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise ValueError("grid requires lo < hi in every dimension")
        if any(c < 1 for c in cells):
            raise ValueError("cell counts must be positive")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "cells", cells)

    @property
    def k(self) -> int:
        return len(self.cells)

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    @property
    def step(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / np.array(self.cells)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.step))

    def axes(self) -> list:
        step = self.step
        return [self.lo[d] + (np.arange(self.cells[d]) + 0.5) * step[d] for d in range(self.k)]

    def centers(self) -> np.ndarray:
        """Cell centers as an ``(size, k)`` array in C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


class GridDensity:
    """Density values at the cell centers of a grid (not renormalized)."""

    __slots__ = ("spec", "values")

    def __init__(self, spec: GridSpec, values):
        vals = np.array(values, dtype=np.float64).ravel()
        if vals.shape[0] != spec.size:
            raise ValueError(f"expected {spec.size} values, got {vals.shape[0]}")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("density values must be finite and nonnegative")
        vals.setflags(write=False)
        self.spec = spec
        self.values = vals

    @property
    def cell_volume(self) -> float:
        return self.spec.cell_volume

    def mass(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def to_csv(self, path) -> None:
        """Write ``cell_index,center0..center{k-1},value`` rows."""
        centers = self.spec.centers()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cell_index"] + [f"center{d}" for d in range(self.spec.k)] + ["value"])
            for i, (c, v) in enumerate(zip(centers, self.values)):
                w.writerow([i] + [format(x, ".17g") for x in c] + [format(v, ".17g")])

    def __repr__(self):
        return f"GridDensity(cells={self.spec.cells}, mass={self.mass():.6g})"


def default_bandwidth(n: int, k: int) -> float:
    """Bandwidth ``n ** (-1 / (2 + k))`` used by the risk analysis."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    return float(n) ** (-1.0 / (2.0 + k))


def default_cells(k: int) -> int:
    """Cells per dimension: 4096 on a line, 64 per axis otherwise."""
    return 4096 if k == 1 else 64


def kde_fit(bag: SampleBag, b: float, kernel: SmoothingKernel, spec: GridSpec) -> GridDensity:
    """Evaluate ``(1/n) sum_j b^-k B(||x - X_j|| / b)`` at every cell center."""
    if not b > 0:
        raise ValueError("bandwidth must be positive")
    if bag.k != spec.k:
        raise GridMismatchError(f"bag has dimension {bag.k}, grid has {spec.k}")
    sums = _backend.kde_grid(bag.points, float(b), kernel.code,
                             np.array(spec.lo), spec.step, np.array(spec.cells))
    scale = kernel.normalizer(bag.k) / (bag.n * float(b) ** bag.k)
    return GridDensity(spec, sums * scale)


def kde_fit_many(bags: Sequence[SampleBag], b: float, kernel: SmoothingKernel,
                 spec: GridSpec, threads: int | None = None) -> list:
    """:func:`kde_fit` over many bags; results keep input order."""
    if threads is None or threads <= 1 or len(bags) < 2:
        return [kde_fit(bag, b, kernel, spec) for bag in bags]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda bag: kde_fit(bag, b, kernel, spec), bags))


def auto_grid(bags: Sequence[SampleBag], cells_per_dim: int, b_max: float,
              support_radius: float = 1.0) -> GridSpec:
    """Grid spanning the pooled sample range padded by ``b_max * support_radius``."""
    if not bags:
        raise ValueError("auto_grid needs at least one bag")
    k = bags[0].k
    if any(bag.k != k for bag in bags):
        raise GridMismatchError("bags have different dimensions")
    if cells_per_dim < 2:
        raise ValueError("cells_per_dim must be at least 2")
    lo = np.min([bag.points.min(axis=0) for bag in bags], axis=0)
    hi = np.max([bag.points.max(axis=0) for bag in bags], axis=0)
    pad = float(b_max) * float(support_radius)
    return GridSpec(tuple(lo - pad), tuple(hi + pad), (int(cells_per_dim),) * k)


def _check_same_grid(p: GridDensity, q: GridDensity) -> None:
    if p.spec != q.spec:
        raise GridMismatchError("densities live on different grids")


def l1_distance(p: GridDensity, q: GridDensity) -> float:
    _check_same_grid(p, q)
    return float(np.abs(p.values - q.values).sum() * p.cell_volume)


def l2_distance(p: GridDensity, q: GridDensity) -> float:
    _check_same_grid(p, q)
    diff = p.values - q.values
    return float(np.sqrt(np.dot(diff, diff) * p.cell_volume))


def distance(p: GridDensity, q: GridDensity, kind: str = "l1") -> float:
    if kind == "l1":
        return l1_distance(p, q)
    if kind == "l2":
        return l2_distance(p, q)
    raise ValueError(f"unknown distance {kind!r}; expected one of {DISTANCES}")


def distances_to(stack: np.ndarray, q: np.ndarray, cell_volume: float, kind: str) -> np.ndarray:
    """Distances from ``q`` to every row of ``stack`` (all on one grid).

    Row-wise this is the same sum as :func:`l1_distance` / :func:`l2_distance`.
    """
    diff = stack - q[None, :]
    if kind == "l1":
        return np.abs(diff).sum(axis=1) * cell_volume
    if kind == "l2":
        return np.sqrt(np.einsum("ij,ij->i", diff, diff) * cell_volume)
    raise ValueError(f"unknown distance {kind!r}; expected one of {DISTANCES}")
