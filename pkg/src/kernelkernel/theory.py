"""Rate calculator and empirical diagnostics for the kernel-kernel estimator.

The risk bound in terms of the doubling dimension ``d`` of the
meta-distribution reads (constants dropped)

    R(m, n) <~ 1 / (h^(d+1) n^(1/(k+2)))  +  h^beta  +  sqrt(1 / (m h^d)).

If the variance term ``sqrt(1/(m h^d))`` dominates the density-estimation
term the rate is governed by ``m``; otherwise by ``n``. With unit
constants the two cases split exactly at ``n = m^((beta+d+1)(k+2)/(2 beta+d))``.

The Hölder constant of the regression functional, the bound on ``|f|`` and
the density-estimation constants of the risk bound have no computable
counterpart here; they stay documented assumptions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .density import (
    GridDensity,
    GridMismatchError,
    GridSpec,
    SampleBag,
    default_bandwidth,
    default_cells,
    distances_to,
    kde_fit,
)
from .kernels import SmoothingKernel
from .synthetic import derive_seed, make_rng

M_LIMITED = "m_limited"
N_LIMITED = "n_limited"


# -- rates ----------------------------------------------------------------

@dataclass(frozen=True)
class RateSpec:
    beta: float
    d: float
    k: int
    m: int
    n: int
    noiseless: bool = False

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ValueError("beta must lie in (0, 1]")
        if not self.d > 0:
            raise ValueError("doubling dimension d must be positive")
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.m < 2 or self.n < 2:
            raise ValueError("m and n must be at least 2")


@dataclass(frozen=True)
class RateCandidate:
    regime: str
    base: str
    exponent: float
    h_star: float


@dataclass(frozen=True)
class RateResult:
    regime: str
    h_star: float
    risk_exponent_base: str
    risk_exponent: float
    threshold_exponent: float
    near_boundary: bool = False
    alternatives: tuple = field(default_factory=tuple)

    def as_text(self) -> str:
        lines = [
            f"regime={self.regime}",
            f"h_star={self.h_star:.17g}",
            f"risk_exponent_base={self.risk_exponent_base}",
            f"risk_exponent={self.risk_exponent:.17g}",
            f"threshold_exponent={self.threshold_exponent:.17g}",
            f"near_boundary={'true' if self.near_boundary else 'false'}",
        ]
        for alt in self.alternatives:
            lines.append(f"candidate_{alt.regime}={alt.base}^{alt.exponent:.17g} h={alt.h_star:.17g}")
        return "\n".join(lines) + "\n"


def m_limited_exponent(beta: float, d: float) -> float:
    return -beta / (2.0 * beta + d)


def n_limited_exponent(beta: float, d: float, k: int) -> float:
    return -beta / ((k + 2.0) * (beta + d + 1.0))


def noiseless_exponent(beta: float, d: float) -> float:
    return -1.0 / (beta + d)


def _candidates(spec: RateSpec):
    b, d, k = spec.beta, spec.d, spec.k
    logm, logn = math.log(spec.m), math.log(spec.n)
    if spec.noiseless:
        m_exp = noiseless_exponent(b, d)
        m_h = math.exp(-logm / (b + d))
        threshold = (b + d + 1.0) / ((b + d) * (k + 2.0))
    else:
        m_exp = m_limited_exponent(b, d)
        m_h = math.exp(-logm / (2.0 * b + d))
        threshold = (b + d + 1.0) * (k + 2.0) / (2.0 * b + d)
    n_cand = RateCandidate(N_LIMITED, "n", n_limited_exponent(b, d, k),
                           math.exp(-logn / ((k + 2.0) * (b + d + 1.0))))
    m_cand = RateCandidate(M_LIMITED, "m", m_exp, m_h)
    # log(n / m^threshold): >= 0 means n is large enough for the m-limited rate
    margin = logn - threshold * logm
    return m_cand, n_cand, threshold, margin


def risk_rate(spec: RateSpec) -> RateResult:
    """Regime, optimal ``h`` and risk exponent for a rate specification.

    Noisy case: ``m^(-beta/(2beta+d))`` with ``h = m^(-1/(2beta+d))`` once
    ``n >= m^((beta+d+1)(k+2)/(2beta+d))``, else ``n^(-beta/((k+2)(beta+d+1)))``
    with ``h = n^(-1/((k+2)(beta+d+1)))``.

    Noiseless case: ``m^(-1/(beta+d))`` once ``n >= m^((beta+d+1)/((beta+d)(k+2)))``,
    otherwise the same ``n`` rate.

    Within a factor 2 of the split both candidates are reported in
    ``alternatives`` and ``near_boundary`` is set, since the asymptotic
    conditions carry no constants.
    """
    m_cand, n_cand, threshold, margin = _candidates(spec)
    chosen = m_cand if margin >= 0 else n_cand
    near = abs(margin) <= math.log(2.0)
    return RateResult(
        regime=chosen.regime,
        h_star=chosen.h_star,
        risk_exponent_base=chosen.base,
        risk_exponent=chosen.exponent,
        threshold_exponent=threshold,
        near_boundary=near,
        alternatives=(m_cand, n_cand) if near else (),
    )


def dominance_terms(spec: RateSpec, h: float) -> tuple:
    """Logs of the density-estimation term and the variance term at ``h``.

    Noisy: ``1/(h^(d+1) n^(1/(k+2)))`` vs ``sqrt(1/(m h^d))``.
    Noiseless: ``1/(h^(d+1) n^(1/(k+2)))`` vs ``1/(m h^d)``.
    """
    logh = math.log(h)
    log_density = -(spec.d + 1.0) * logh - math.log(spec.n) / (spec.k + 2.0)
    log_var = -(math.log(spec.m) + spec.d * logh)
    if not spec.noiseless:
        log_var *= 0.5
    return log_density, log_var


def regime_consistent(spec: RateSpec, result: RateResult, rtol: float = 1e-12) -> bool:
    """Whether the regime's dominance condition holds at ``result.h_star``.

    For the noisy rates this evaluates the two competing terms of the bound
    at ``h_star``. The noiseless split is stated only as a threshold on
    ``n``, so the threshold itself is re-checked there.
    """
    if spec.noiseless:
        margin = math.log(spec.n) - result.threshold_exponent * math.log(spec.m)
        slack = rtol * max(1.0, abs(math.log(spec.n)))
        return margin >= -slack if result.regime == M_LIMITED else margin <= slack
    log_density, log_var = dominance_terms(spec, result.h_star)
    slack = rtol * max(1.0, abs(log_density), abs(log_var))
    if result.regime == M_LIMITED:
        return log_var >= log_density - slack
    return log_var <= log_density + slack


# -- small-ball probability ----------------------------------------------

def _stack(densities: Sequence[GridDensity], grid: GridSpec) -> np.ndarray:
    if any(p.spec != grid for p in densities):
        raise GridMismatchError("densities live on different grids")
    return np.vstack([p.values for p in densities])


def small_ball_estimate(densities: Sequence[GridDensity], center: GridDensity, radius: float,
                        distance: str = "l1") -> float:
    """Fraction of ``densities`` within ``radius`` (inclusive) of ``center``."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    if not densities:
        raise ValueError("need at least one density")
    dist = distances_to(_stack(densities, center.spec), center.values,
                        center.cell_volume, distance)
    return float(np.count_nonzero(dist <= radius)) / len(densities)


# -- doubling dimension ----------------------------------------------------

@dataclass
class DoublingFit:
    d_hat: float
    eps: float
    rows: list  # (center_index, radius, outer_count, inner_count, retained)

    @property
    def retained(self) -> int:
        return sum(1 for r in self.rows if r[4])


def doubling_fit(densities: Sequence[GridDensity], centers: Sequence[GridDensity],
                 radii: Sequence[float], eps: float, distance: str = "l1",
                 min_inner: int = 5) -> DoublingFit:
    """Count ball populations at ``r`` and ``eps * r`` around every center.

    The fit regresses ``log(count(r) / count(eps r))`` on ``log(1/eps)``
    through the origin over the pairs whose inner count is at least
    ``min_inner``.
    """
    if len(radii) < 2:
        raise ValueError("need at least two radii")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if not densities or not centers:
        raise ValueError("need densities and centers")
    grid = densities[0].spec
    stack = _stack(densities, grid)
    rows = []
    for ci, c in enumerate(centers):
        if c.spec != grid:
            raise GridMismatchError("center is not on the density grid")
        dist = distances_to(stack, c.values, grid.cell_volume, distance)
        for r in radii:
            outer = int(np.count_nonzero(dist <= r))
            inner = int(np.count_nonzero(dist <= eps * r))
            rows.append((ci, float(r), outer, inner, inner >= min_inner))
    kept = [(o, i) for _, _, o, i, ok in rows if ok]
    if not kept:
        raise ValueError("no (center, radius) pair has enough points in the inner ball")
    x = math.log(1.0 / eps)
    ys = np.array([math.log(o / i) for o, i in kept])
    # least squares through the origin with a single regressor value
    d_hat = float(np.sum(ys * x) / (len(ys) * x * x))
    return DoublingFit(d_hat=d_hat, eps=eps, rows=rows)


def doubling_dim_estimate(densities: Sequence[GridDensity], centers: Sequence[GridDensity],
                          radii: Sequence[float], eps: float, distance: str = "l1",
                          min_inner: int = 5) -> float:
    return doubling_fit(densities, centers, radii, eps, distance, min_inner).d_hat


def default_radii(densities: Sequence[GridDensity], centers: Sequence[GridDensity],
                  distance: str = "l1", count: int = 6, lo_q: float = 0.05,
                  hi_q: float = 0.25) -> list:
    """Geometric radii between two quantiles of the center-to-density distances."""
    grid = densities[0].spec
    stack = _stack(densities, grid)
    dist = np.concatenate([distances_to(stack, c.values, grid.cell_volume, distance)
                           for c in centers])
    dist = dist[dist > 0]
    lo, hi = np.quantile(dist, [lo_q, hi_q])
    return list(np.geomspace(lo, hi, count))


# -- KDE L1 risk study ----------------------------------------------------

@dataclass(frozen=True)
class AnalyticDensity:
    """A density with a sampler, evaluated on grids as ``pdf(centers)``."""

    pdf: Callable[[np.ndarray], np.ndarray]
    sample: Callable[[int, np.random.Generator], np.ndarray]
    lo: tuple
    hi: tuple
    name: str = "custom"

    @property
    def k(self) -> int:
        return len(self.lo)


def uniform_density(k: int = 1) -> AnalyticDensity:
    """Uniform law on the unit cube ``[0, 1]^k``."""

    def pdf(x):
        x = np.asarray(x)
        return np.all((x >= 0.0) & (x <= 1.0), axis=1).astype(float)

    def sample(n, rng):
        return rng.random((n, k))

    return AnalyticDensity(pdf, sample, (0.0,) * k, (1.0,) * k, name=f"uniform{k}")


def beta_density(a: float, b: float) -> AnalyticDensity:
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)

    def pdf(x):
        t = np.asarray(x)[:, 0]
        out = np.zeros_like(t)
        inside = (t > 0) & (t < 1)
        ti = t[inside]
        out[inside] = np.exp((a - 1) * np.log(ti) + (b - 1) * np.log1p(-ti) - lbeta)
        return out

    def sample(n, rng):
        ga = rng.standard_gamma(a, n)
        gb = rng.standard_gamma(b, n)
        return (ga / (ga + gb))[:, None]

    return AnalyticDensity(pdf, sample, (0.0,), (1.0,), name=f"beta({a:g},{b:g})")


def replicate_seed(seed: int, n: int, rep: int) -> int:
    return derive_seed(derive_seed(seed, n), rep)


def replicate_bag(truth: AnalyticDensity, n: int, rep: int, seed: int) -> SampleBag:
    return SampleBag(truth.sample(n, make_rng(replicate_seed(seed, n, rep))))


@dataclass
class KDERiskStudy:
    rows: list      # (n, rep, l1_error)
    summary: list   # (n, mean_error)
    slope: float
    grid: GridSpec


def loglog_slope(ns: Sequence[float], errors: Sequence[float]) -> float:
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    ok = errors > 0
    if np.count_nonzero(ok) < 2:
        return float("nan")
    return float(np.polyfit(np.log(ns[ok]), np.log(errors[ok]), 1)[0])


def kde_l1_risk_study(truth: AnalyticDensity, ns: Sequence[int], reps: int, k: int | None = None,
                      kernel: SmoothingKernel | None = None, seed: int = 0,
                      cells: int | None = None) -> KDERiskStudy:
    """Mean L1 error of KDEs with ``b = n^(-1/(2+k))`` for each sample size.

    The study grid covers the truth's support padded by the largest
    bandwidth used, so every KDE keeps all its mass on the grid.
    """
    k = truth.k if k is None else k
    if k != truth.k:
        raise ValueError("k does not match the dimension of the true density")
    if len(set(ns)) < 3:
        raise ValueError("need at least three distinct sample sizes to fit a slope")
    if reps < 1:
        raise ValueError("reps must be at least 1")
    kernel = kernel or SmoothingKernel()
    ns = sorted(set(int(n) for n in ns))
    pad = default_bandwidth(ns[0], k) * kernel.support_radius
    cells = cells or default_cells(k)
    grid = GridSpec(tuple(v - pad for v in truth.lo), tuple(v + pad for v in truth.hi), (cells,) * k)
    true_vals = np.asarray(truth.pdf(grid.centers()), dtype=float)
    rows, summary = [], []
    for n in ns:
        b = default_bandwidth(n, k)
        errs = []
        for rep in range(reps):
            est = kde_fit(replicate_bag(truth, n, rep, seed), b, kernel, grid)
            err = float(np.abs(est.values - true_vals).sum() * grid.cell_volume)
            rows.append((n, rep, err))
            errs.append(err)
        summary.append((n, float(np.mean(errs))))
    slope = loglog_slope([s[0] for s in summary], [s[1] for s in summary])
    return KDERiskStudy(rows=rows, summary=summary, slope=slope, grid=grid)
