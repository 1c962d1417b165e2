import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernelkernel.density import (
    GridDensity,
    GridMismatchError,
    GridSpec,
    SampleBag,
    auto_grid,
    default_bandwidth,
    kde_fit,
    l1_distance,
    l2_distance,
)
from kernelkernel.kernels import SmoothingKernel

from conftest import naive_kde, random_density

# 500 ** (-1/4), 40 digits from mpmath
BW_500_2 = 0.2114742526881128239
# 2 * (2 * Phi(0.25) - 1), normal CDF from mpmath
GAUSS_SHIFT_L1 = 0.3948253027316948970


def test_default_bandwidth():
    assert default_bandwidth(1000, 1) == pytest.approx(0.1, rel=1e-14)
    assert default_bandwidth(1, 5) == 1.0
    assert default_bandwidth(500, 2) == pytest.approx(BW_500_2, rel=1e-14)
    with pytest.raises(ValueError):
        default_bandwidth(0, 1)


def test_bag_validation():
    with pytest.raises(ValueError):
        SampleBag(np.empty((0, 1)))
    with pytest.raises(ValueError):
        SampleBag([[0.0], [np.nan]])
    assert SampleBag([0.1, 0.2, 0.3]).k == 1


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec((1.0,), (0.0,), (10,))
    with pytest.raises(ValueError):
        GridSpec((0.0, 0.0), (1.0,), (10,))
    g = GridSpec((0, 0), (1, 2), (4, 8))
    assert g.size == 32
    assert g.cell_volume == pytest.approx(0.25 * 0.25)


def test_kde_single_point_boxcar():
    grid = GridSpec((-2.0,), (2.0,), (400,))
    dens = kde_fit(SampleBag([[0.0]]), 1.0, SmoothingKernel("boxcar"), grid)
    x = grid.centers()[:, 0]
    np.testing.assert_array_equal(dens.values, np.where(np.abs(x) <= 1, 0.5, 0.0))


def test_kde_two_points_symmetric():
    grid = GridSpec((-2.0,), (2.0,), (401,))
    dens = kde_fit(SampleBag([[-1.0], [1.0]]), 0.5, SmoothingKernel("triangle"), grid)
    np.testing.assert_allclose(dens.values, dens.values[::-1], rtol=0, atol=1e-14)


def test_kde_uniform_mass(rng):
    bag = SampleBag(rng.random((100, 1)))
    grid = auto_grid([bag], 4096, 0.1, 1.0)
    dens = kde_fit(bag, 0.1, SmoothingKernel("epanechnikov"), grid)
    direct = sum(float(v) for v in dens.values) * grid.cell_volume
    assert 0.98 <= direct <= 1.02
    assert dens.mass() == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("family", ["epanechnikov", "triangle", "boxcar"])
@pytest.mark.parametrize("k", [1, 2])
def test_kde_matches_naive_oracle(family, k, rng):
    pts = rng.normal(size=(rng.integers(5, 50), k))
    cells = 200 if k == 1 else 24
    bag = SampleBag(pts)
    grid = auto_grid([bag], cells, 0.8, 1.0)
    dens = kde_fit(bag, 0.8, SmoothingKernel(family), grid)
    np.testing.assert_allclose(dens.values, naive_kde(pts, 0.8, family, grid), rtol=1e-10, atol=1e-13)


def test_kde_errors(small_bag, line_grid):
    with pytest.raises(ValueError):
        kde_fit(small_bag, 0.0, SmoothingKernel(), line_grid)
    with pytest.raises(GridMismatchError):
        kde_fit(SampleBag(np.zeros((3, 2))), 0.1, SmoothingKernel(), line_grid)


def test_kde_shift_equivariance():
    # dyadic data keep every subtraction exact, so shifted values are identical
    rng = np.random.default_rng(7)
    pts = np.round(rng.random((40, 1)) * 2**10) / 2**10
    grid = GridSpec((-1.0,), (2.0,), (3 * 256,))
    c = 3.0
    shifted = GridSpec((-1.0 + c,), (2.0 + c,), (3 * 256,))
    kern = SmoothingKernel("triangle")
    a = kde_fit(SampleBag(pts), 0.25, kern, grid)
    b = kde_fit(SampleBag(pts + c), 0.25, kern, shifted)
    np.testing.assert_array_equal(a.values, b.values)


def test_auto_grid():
    bags = [SampleBag([[0.0], [0.5]]), SampleBag([[1.0]])]
    g = auto_grid(bags, 4096, 0.1, 1.0)
    assert g.lo == pytest.approx((-0.1,)) and g.hi == pytest.approx((1.1,))
    assert g.size == 4096
    assert auto_grid(bags, 4096, 0.1, 1.0) == g
    g2 = auto_grid([SampleBag(np.random.default_rng(0).random((5, 2)))], 64, 0.2, 1.0)
    assert g2.size == 4096
    with pytest.raises(ValueError):
        auto_grid([], 10, 0.1, 1.0)


def _box(grid, lo, hi):
    x = grid.centers()[:, 0]
    return GridDensity(grid, ((x >= lo) & (x < hi)).astype(float))


def test_distance_examples():
    grid = GridSpec((0.0,), (4.0,), (4000,))
    p, q = _box(grid, 0, 1), _box(grid, 2, 3)
    assert l1_distance(p, p) == 0.0 and l2_distance(p, p) == 0.0
    assert l1_distance(p, q) == pytest.approx(2.0, rel=1e-12)
    assert l2_distance(p, q) == pytest.approx(np.sqrt(2.0), rel=1e-12)


def test_l1_between_shifted_gaussians():
    grid = GridSpec((-6.0,), (6.5,), (4096,))
    x = grid.centers()[:, 0]
    pdf = lambda mu: np.exp(-0.5 * (x - mu) ** 2) / np.sqrt(2 * np.pi)
    d = l1_distance(GridDensity(grid, pdf(0.0)), GridDensity(grid, pdf(0.5)))
    assert abs(d - GAUSS_SHIFT_L1) < 1e-3


def test_l2_matches_resummation(rng):
    grid = GridSpec((0.0,), (3.0,), (1000,))
    p, q = random_density(rng, grid, False), random_density(rng, grid, False)
    acc = 0.0
    for a, b in reversed(list(zip(p.values.tolist(), q.values.tolist()))):
        acc += (a - b) ** 2
    oracle = np.sqrt(acc * grid.cell_volume)
    assert l2_distance(p, q) == pytest.approx(oracle, rel=1e-12)
    assert l2_distance(p, q) == l2_distance(q, p)


def test_distance_grid_mismatch(rng):
    a = random_density(rng, GridSpec((0.0,), (1.0,), (10,)))
    b = random_density(rng, GridSpec((0.0,), (1.0,), (11,)))
    with pytest.raises(GridMismatchError):
        l1_distance(a, b)
    with pytest.raises(GridMismatchError):
        l2_distance(a, b)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_l1_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    grid = GridSpec((0.0,), (1.0,), (64,))
    p, q, r = (random_density(rng, grid) for _ in range(3))
    assert l1_distance(p, q) == l1_distance(q, p)
    assert l1_distance(p, r) <= (l1_distance(p, q) + l1_distance(q, r)) * (1 + 1e-12)
    assert l1_distance(p, q) <= 2 + 1e-6
    assert (l1_distance(p, q) == 0) == np.array_equal(p.values, q.values)


def test_density_csv_export(tmp_path):
    grid = GridSpec((0.0, 0.0), (1.0, 1.0), (2, 3))
    dens = GridDensity(grid, np.arange(6, dtype=float))
    path = tmp_path / "d.csv"
    dens.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "cell_index,center0,center1,value"
    assert len(lines) == 7
    assert lines[1] == "0,0.25,0.16666666666666666,0"
