import numpy as np
import pytest

from kernelkernel.density import SampleBag, auto_grid, default_bandwidth
from kernelkernel.kernels import RegressionKernel, SmoothingKernel
from kernelkernel.regressor import KernelPair, LabeledBag, fit, predict
from kernelkernel.selection import (
    SelectionConfig,
    draw_candidates,
    select_bandwidths,
    validation_mse,
)
from kernelkernel.synthetic import BetaTask, TaskCounts

KERNELS = KernelPair(SmoothingKernel("triangle"), RegressionKernel())


@pytest.fixture(scope="module")
def beta_small():
    data = BetaTask(n_per_bag=200, counts=TaskCounts(30, 8, 5)).generate(11)
    grid = auto_grid(data.bags, 512, 1.0, 1.0)
    return data.subset("train"), data.subset("val"), grid


def test_config_validation():
    with pytest.raises(ValueError):
        SelectionConfig(trials=0)
    with pytest.raises(ValueError):
        SelectionConfig(range_b=(0.5, 0.2))
    with pytest.raises(ValueError):
        SelectionConfig(range_h=(0.0, 1.5))


def test_validation_mse_exact_fit():
    rng = np.random.default_rng(0)
    bags = [SampleBag(rng.random(50)) for _ in range(4)]
    grid = auto_grid(bags, 256, 0.5, 1.0)
    train = [LabeledBag(b, 2.5) for b in bags[:3]]
    val = [LabeledBag(bags[3], 2.5)]
    assert validation_mse(train, val, 0.5, 1.0, "l1", KERNELS, grid) == 0.0


def test_validation_mse_matches_loop(beta_small):
    train, val, grid = beta_small
    mse = validation_mse(train, val, 0.3, 0.4, "l2", KERNELS, grid)
    model = fit(train, 0.4, 0.3, "l2", KERNELS, grid)
    acc = 0.0
    for v in val:
        acc += (predict(model, v.bag) - v.y) ** 2
    assert mse == pytest.approx(acc / len(val), rel=1e-12)


def test_validation_mse_all_zero_branch():
    rng = np.random.default_rng(1)
    bags = [SampleBag(rng.random(50)) for _ in range(4)]
    grid = auto_grid(bags, 256, 0.5, 1.0)
    train = [LabeledBag(b, 1.0) for b in bags[:3]]
    val = [LabeledBag(bags[3], 1.0)]
    assert validation_mse(train, val, 0.2, 1e-9, "l1", KERNELS, grid) == 1.0


def test_trial_fast_path_agrees_with_validation_mse(beta_small):
    train, val, grid = beta_small
    res = select_bandwidths(train, val, SelectionConfig(trials=4, seed=3), "l2", KERNELS, grid)
    for b, h, mse in res.trace:
        assert mse == pytest.approx(validation_mse(train, val, b, h, "l2", KERNELS, grid), rel=1e-12)


def test_single_trial(beta_small):
    train, val, grid = beta_small
    res = select_bandwidths(train, val, SelectionConfig(trials=1, seed=5), "l2", KERNELS, grid)
    assert len(res.trace) == 1
    assert (res.best_b, res.best_h, res.best_mse) == res.trace[0]


def test_determinism(beta_small):
    train, val, grid = beta_small
    cfg = SelectionConfig(trials=5, seed=9)
    assert select_bandwidths(train, val, cfg, "l2", KERNELS, grid) == \
        select_bandwidths(train, val, cfg, "l2", KERNELS, grid)


def test_draws_in_range_and_prefix():
    cfg = SelectionConfig(trials=200, range_b=(0.1, 0.4), range_h=(0.5, 1.0), seed=4)
    pairs = draw_candidates(cfg)
    assert np.all((pairs[:, 0] > 0.1) & (pairs[:, 0] <= 0.4))
    assert np.all((pairs[:, 1] > 0.5) & (pairs[:, 1] <= 1.0))
    short = draw_candidates(SelectionConfig(trials=20, range_b=(0.1, 0.4), range_h=(0.5, 1.0), seed=4))
    np.testing.assert_array_equal(short, pairs[:20])


def test_best_mse_nonincreasing_in_trials(beta_small):
    train, val, grid = beta_small
    best = [select_bandwidths(train, val, SelectionConfig(trials=t, seed=2), "l2", KERNELS, grid).best_mse
            for t in (1, 3, 6)]
    assert best[0] >= best[1] >= best[2]


def test_ties_go_to_first_trial(beta_small):
    train, val, grid = beta_small
    cfg = SelectionConfig(trials=1, seed=1)
    b, h = draw_candidates(cfg)[0]
    res = select_bandwidths(train, val, cfg, "l2", KERNELS, grid, extra=[(b, h)])
    assert res.trace[0][2] == res.trace[1][2]
    assert res.trace.index((res.best_b, res.best_h, res.best_mse)) == 0


def test_pilot_candidate_never_beats_argmin(beta_small):
    train, val, grid = beta_small
    pilot = (default_bandwidth(500, 1), 0.1)
    res = select_bandwidths(train, val, SelectionConfig(trials=10, seed=0), "l2", KERNELS, grid,
                            extra=[pilot])
    assert res.best_mse <= res.trace[-1][2]


def test_trace_csv(beta_small, tmp_path):
    train, val, grid = beta_small
    res = select_bandwidths(train, val, SelectionConfig(trials=2, seed=0), "l2", KERNELS, grid)
    res.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "trial,b,h,mse" and len(lines) == 3
