"""Select the grid KDE kernel: compiled extension if importable, else numpy.

Set ``KERNELKERNEL_PURE=1`` to force the numpy implementation.
"""
import os

from . import _kde_py

kde_grid_py = _kde_py.kde_grid
kde_grid_ext = None

if os.environ.get("KERNELKERNEL_PURE", "") not in ("", "0"):
    kde_grid = kde_grid_py
    BACKEND = "python"
else:
    try:
        from ._kde_ext import kde_grid as kde_grid_ext
    except ImportError:
        kde_grid = kde_grid_py
        BACKEND = "python"
    else:
        kde_grid = kde_grid_ext
        BACKEND = "cython"
