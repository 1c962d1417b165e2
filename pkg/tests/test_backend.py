import os
import subprocess
import sys

import numpy as np
import pytest

from kernelkernel import _backend
from kernelkernel.kernels import FAMILY_CODES

needs_ext = pytest.mark.skipif(_backend.kde_grid_ext is None, reason="compiled kernel not built")


@needs_ext
@pytest.mark.parametrize("k,cells", [(1, (500,)), (2, (40, 33)), (3, (9, 10, 11))])
@pytest.mark.parametrize("family", sorted(FAMILY_CODES))
def test_compiled_matches_numpy(k, cells, family):
    rng = np.random.default_rng(k)
    pts = rng.normal(size=(60, k))
    lo = np.full(k, -3.0)
    step = np.full(k, 6.0) / np.array(cells)
    for b in (0.05, 0.7, 5.0):
        ext = _backend.kde_grid_ext(pts, b, FAMILY_CODES[family], lo, step, cells)
        ref = _backend.kde_grid_py(pts, b, FAMILY_CODES[family], lo, step, cells)
        np.testing.assert_allclose(ext, ref, rtol=1e-12, atol=1e-12)


@needs_ext
def test_points_outside_grid_are_ignored():
    pts = np.array([[-50.0], [1e12], [0.5]])
    ext = _backend.kde_grid_ext(pts, 0.1, 0, [0.0], [0.01], [100])
    ref = _backend.kde_grid_py(pts, 0.1, 0, np.array([0.0]), np.array([0.01]), np.array([100]))
    np.testing.assert_allclose(ext, ref, rtol=1e-12, atol=1e-12)


def test_pure_backend_can_be_forced():
    env = dict(os.environ, KERNELKERNEL_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import kernelkernel; print(kernelkernel.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
