"""Pure numpy fallback for the grid KDE kernel.

``kde_grid`` returns the unscaled sums ``sum_j B(||c - X_j|| / b)`` at every
cell center ``c`` (C order, last axis fastest). Callers apply the
``normalizer / (n * b**k)`` factor.
"""
import numpy as np

_CHUNK = 1 << 21


def _centers(lo, step, cells):
    axes = [lo[d] + (np.arange(cells[d]) + 0.5) * step[d] for d in range(len(cells))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _profile_sum(u, code):
    inside = u <= 1.0
    if code == 0:
        vals = 0.75 * (1.0 - u * u)
    elif code == 1:
        vals = 1.0 - u
    elif code == 2:
        vals = np.full_like(u, 0.5)
    else:
        raise ValueError(f"unknown kernel code {code}")
    return np.where(inside, vals, 0.0).sum(axis=1)


def kde_grid(points, b, code, lo, step, cells):
    points = np.ascontiguousarray(points, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    step = np.asarray(step, dtype=np.float64)
    cells = np.asarray(cells, dtype=np.int64)
    centers = _centers(lo, step, cells)
    n, k = points.shape
    out = np.empty(centers.shape[0])
    rows = max(1, _CHUNK // max(n, 1))
    for start in range(0, centers.shape[0], rows):
        c = centers[start:start + rows]
        if k == 1:
            dist = np.abs(c[:, :1] - points[:, 0][None, :])
        else:
            diff = c[:, None, :] - points[None, :, :]
            dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        out[start:start + rows] = _profile_sum(dist / b, code)
    return out
