"""Bandwidth selection by uniform random search on a validation set."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .density import GridSpec, kde_fit_many
from .regressor import KernelPair, LabeledBag, fit, predict_batch, weighted_average
from .kernels import eval_regression
from .density import distances_to


@dataclass(frozen=True)
class SelectionConfig:
    """Random-search settings. Both ranges are half-open ``(lo, hi]``."""

    trials: int = 100
    range_b: tuple = (0.0, 1.0)
    range_h: tuple = (0.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for name, (lo, hi) in (("range_b", self.range_b), ("range_h", self.range_h)):
            if not (0.0 <= lo < hi <= 1.0):
                raise ValueError(f"{name} must satisfy 0 <= lo < hi <= 1, got ({lo}, {hi})")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class SelectionResult:
    best_b: float
    best_h: float
    best_mse: float
    trace: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "b", "h", "mse"])
            for i, (b, h, mse) in enumerate(self.trace):
                w.writerow([i, format(b, ".17g"), format(h, ".17g"), format(mse, ".17g")])


def draw_candidates(config: SelectionConfig) -> np.ndarray:
    """The ``(trials, 2)`` array of ``(b, h)`` pairs for a config.

    Draws alternate b, h from one stream, so a longer search with the same
    seed extends a shorter one. Values map ``[0, 1)`` onto ``(lo, hi]``.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))
    u = rng.random((config.trials, 2))
    (blo, bhi), (hlo, hhi) = config.range_b, config.range_h
    b = bhi - u[:, 0] * (bhi - blo)
    h = hhi - u[:, 1] * (hhi - hlo)
    return np.column_stack([b, h])


def validation_mse(train: Sequence[LabeledBag], val: Sequence[LabeledBag], b: float, h: float,
                   distance: str = "l1", kernels: KernelPair | None = None,
                   grid: GridSpec | None = None, threads: int | None = None) -> float:
    """Mean squared validation error of a model fitted with ``(b, h)``."""
    if not train or not val:
        raise ValueError("train and validation sets must be nonempty")
    model = fit(train, h, b, distance, kernels, grid, threads)
    preds = np.array(predict_batch(model, [v.bag for v in val], threads))
    ys = np.array([v.y for v in val])
    return float(np.mean((preds - ys) ** 2))


def _trial_mse(train, val, b, h, distance, kernels, grid, threads):
    # same computation as validation_mse with the KDEs of every bag done in one pass
    dens = kde_fit_many([t.bag for t in train] + [v.bag for v in val], b,
                        kernels.smoothing, grid, threads)
    stack = np.vstack([p.values for p in dens[:len(train)]])
    ys_train = np.array([t.y for t in train])
    sq = []
    for v, q in zip(val, dens[len(train):]):
        w = eval_regression(kernels.regression,
                            distances_to(stack, q.values, grid.cell_volume, distance) / h)
        sq.append((weighted_average(ys_train, w) - v.y) ** 2)
    return float(np.mean(sq))


def select_bandwidths(train: Sequence[LabeledBag], val: Sequence[LabeledBag],
                      config: SelectionConfig, distance: str = "l1",
                      kernels: KernelPair | None = None, grid: GridSpec | None = None,
                      threads: int | None = None, extra: Sequence[tuple] = ()) -> SelectionResult:
    """Evaluate every drawn ``(b, h)`` and keep the first one with the lowest MSE.

    ``extra`` pairs are appended to the trace after the random draws.
    """
    if not train or not val:
        raise ValueError("train and validation sets must be nonempty")
    if grid is None:
        raise ValueError("a grid is required; see density.auto_grid")
    kernels = kernels or KernelPair()
    pairs = [tuple(map(float, p)) for p in draw_candidates(config)]
    pairs += [(float(b), float(h)) for b, h in extra]
    trace = []
    for b, h in pairs:
        trace.append((b, h, _trial_mse(train, val, b, h, distance, kernels, grid, threads)))
    best = min(range(len(trace)), key=lambda i: (trace[i][2], i))
    b, h, mse = trace[best]
    return SelectionResult(best_b=b, best_h=h, best_mse=mse, trace=trace)
