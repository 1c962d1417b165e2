"""The kernel-kernel estimator.

Training bags are turned into grid KDEs once; a query bag is estimated on
the same grid and predicted by a Nadaraya-Watson average whose weights are
``K(distance / h)``. When every weight is zero the prediction is exactly 0.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .density import (
    DISTANCES,
    GridDensity,
    GridMismatchError,
    GridSpec,
    SampleBag,
    distances_to,
    kde_fit,
    kde_fit_many,
)
from .kernels import RegressionKernel, SmoothingKernel, eval_regression


@dataclass(frozen=True)
class LabeledBag:
    """A bag together with its scalar response.

    Responses are used as given. Boundedness of ``y`` is assumed by the
    risk analysis but is the caller's responsibility.
    """

    bag: SampleBag
    y: float

    def __post_init__(self):
        if not math.isfinite(self.y):
            raise ValueError("response must be finite")


@dataclass(frozen=True)
class KernelPair:
    smoothing: SmoothingKernel = field(default_factory=SmoothingKernel)
    regression: RegressionKernel = field(default_factory=RegressionKernel)


@dataclass(eq=False)
class KernelKernelModel:
    densities: list
    responses: np.ndarray
    h: float
    b: float
    distance: str
    regression_kernel: RegressionKernel
    smoothing_kernel: SmoothingKernel
    grid: GridSpec

    def __post_init__(self):
        if len(self.densities) == 0:
            raise ValueError("model needs at least one training density")
        if len(self.densities) != len(self.responses):
            raise ValueError("densities and responses differ in length")
        if any(p.spec != self.grid for p in self.densities):
            raise GridMismatchError("all training densities must share the model grid")
        self.responses = np.asarray(self.responses, dtype=np.float64)
        self.responses.setflags(write=False)
        self._stack = np.vstack([p.values for p in self.densities])
        self._stack.setflags(write=False)

    @property
    def m(self) -> int:
        return len(self.densities)

    def query_density(self, query: SampleBag) -> GridDensity:
        if query.k != self.grid.k:
            raise GridMismatchError(f"query has dimension {query.k}, model grid has {self.grid.k}")
        return kde_fit(query, self.b, self.smoothing_kernel, self.grid)

    def distances(self, q: GridDensity) -> np.ndarray:
        if q.spec != self.grid:
            raise GridMismatchError("query density is not on the model grid")
        return distances_to(self._stack, q.values, self.grid.cell_volume, self.distance)

    def weights(self, q: GridDensity) -> np.ndarray:
        return eval_regression(self.regression_kernel, self.distances(q) / self.h)

    def predict_density(self, q: GridDensity) -> float:
        return weighted_average(self.responses, self.weights(q))

    def predict(self, query: SampleBag) -> float:
        return predict(self, query)


def weighted_average(responses: np.ndarray, w: np.ndarray) -> float:
    """``sum(y * w) / sum(w)``, or exactly 0.0 when ``sum(w) == 0``.

    Both sums are correctly rounded (``math.fsum``), so the result does not
    depend on the order of the training bags.
    """
    w = np.asarray(w, dtype=np.float64)
    total = math.fsum(w.tolist())
    if total == 0.0:
        return 0.0
    return math.fsum((np.asarray(responses, dtype=np.float64) * w).tolist()) / total


def _check_bandwidths(h: float, b: float) -> None:
    if not (h > 0 and math.isfinite(h)):
        raise ValueError("regression bandwidth h must be positive")
    if not (b > 0 and math.isfinite(b)):
        raise ValueError("smoothing bandwidth b must be positive")


def fit(train: Sequence[LabeledBag], h: float, b: float, distance: str = "l1",
        kernels: KernelPair | None = None, grid: GridSpec | None = None,
        threads: int | None = None) -> KernelKernelModel:
    """Estimate one density per training bag and freeze them with the responses."""
    if not train:
        raise ValueError("training set is empty")
    _check_bandwidths(h, b)
    if distance not in DISTANCES:
        raise ValueError(f"unknown distance {distance!r}; expected one of {DISTANCES}")
    if grid is None:
        raise ValueError("a grid is required; see density.auto_grid")
    kernels = kernels or KernelPair()
    for item in train:
        if item.bag.k != grid.k:
            raise GridMismatchError(f"training bag has dimension {item.bag.k}, grid has {grid.k}")
    densities = kde_fit_many([t.bag for t in train], b, kernels.smoothing, grid, threads)
    return KernelKernelModel(
        densities=densities,
        responses=np.array([t.y for t in train], dtype=np.float64),
        h=float(h),
        b=float(b),
        distance=distance,
        regression_kernel=kernels.regression,
        smoothing_kernel=kernels.smoothing,
        grid=grid,
    )


def predict(model: KernelKernelModel, query: SampleBag) -> float:
    return model.predict_density(model.query_density(query))


def predict_batch(model: KernelKernelModel, queries: Sequence[SampleBag],
                  threads: int | None = None) -> list:
    """Predict every query; output order matches input order."""
    for q in queries:
        if q.k != model.grid.k:
            raise GridMismatchError(f"query has dimension {q.k}, model grid has {model.grid.k}")
    dens = kde_fit_many(list(queries), model.b, model.smoothing_kernel, model.grid, threads)
    return [model.predict_density(q) for q in dens]


# -- serialization ---------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_model(model: KernelKernelModel, directory) -> None:
    """Write ``meta``, ``densities.csv`` and ``responses.csv`` into ``directory``.

    ``densities.csv`` has header ``cell_index,center0..,p0..p{m-1}`` with one
    row per grid cell; floats carry 17 significant digits so loading is exact.
    """
    os.makedirs(directory, exist_ok=True)
    g = model.grid
    meta = {
        "format": "kernelkernel-model-1",
        "h": _fmt(model.h),
        "b": _fmt(model.b),
        "k": str(g.k),
        "m": str(model.m),
        "distance": model.distance,
        "smoothing_kernel": model.smoothing_kernel.family,
        "regression_kernel": model.regression_kernel.family,
        "regression_lipschitz": _fmt(model.regression_kernel.lipschitz),
        "regression_lower": _fmt(model.regression_kernel.lower),
        "regression_r": _fmt(model.regression_kernel.r),
        "regression_R": _fmt(model.regression_kernel.R),
        "grid_lo": " ".join(_fmt(v) for v in g.lo),
        "grid_hi": " ".join(_fmt(v) for v in g.hi),
        "grid_cells": " ".join(str(c) for c in g.cells),
    }
    with open(os.path.join(directory, "meta"), "w") as fh:
        for key, val in meta.items():
            fh.write(f"{key}={val}\n")

    centers = g.centers()
    with open(os.path.join(directory, "densities.csv"), "w") as fh:
        header = ["cell_index"] + [f"center{d}" for d in range(g.k)] + [f"p{i}" for i in range(model.m)]
        fh.write(",".join(header) + "\n")
        for c in range(g.size):
            row = [str(c)] + [_fmt(v) for v in centers[c]] + [_fmt(v) for v in model._stack[:, c]]
            fh.write(",".join(row) + "\n")

    with open(os.path.join(directory, "responses.csv"), "w") as fh:
        fh.write("index,y\n")
        for i, y in enumerate(model.responses):
            fh.write(f"{i},{_fmt(y)}\n")


def _read_kv(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def load_model(directory) -> KernelKernelModel:
    meta = _read_kv(os.path.join(directory, "meta"))
    k = int(meta["k"])
    m = int(meta["m"])
    grid = GridSpec(
        tuple(float(v) for v in meta["grid_lo"].split()),
        tuple(float(v) for v in meta["grid_hi"].split()),
        tuple(int(v) for v in meta["grid_cells"].split()),
    )
    raw = np.loadtxt(os.path.join(directory, "densities.csv"), delimiter=",", skiprows=1, ndmin=2)
    if raw.shape != (grid.size, 1 + k + m):
        raise ValueError(f"densities.csv has shape {raw.shape}, expected {(grid.size, 1 + k + m)}")
    stack = raw[:, 1 + k:].T
    resp = np.loadtxt(os.path.join(directory, "responses.csv"), delimiter=",", skiprows=1, ndmin=2)
    if resp.shape[0] != m:
        raise ValueError(f"responses.csv has {resp.shape[0]} rows, expected {m}")
    reg = RegressionKernel(
        family=meta["regression_kernel"],
        lipschitz=float(meta["regression_lipschitz"]),
        lower=float(meta["regression_lower"]),
        r=float(meta["regression_r"]),
        R=float(meta["regression_R"]),
    )
    return KernelKernelModel(
        densities=[GridDensity(grid, row) for row in stack],
        responses=resp[:, 1],
        h=float(meta["h"]),
        b=float(meta["b"]),
        distance=meta["distance"],
        regression_kernel=reg,
        smoothing_kernel=SmoothingKernel(meta["smoothing_kernel"]),
        grid=grid,
    )
