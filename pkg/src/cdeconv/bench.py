"""Monte Carlo MISE experiments and rate fits.

Each (n, rep) cell draws its own stream from ``make_rng(master_seed, n, rep)``
so results do not depend on worker count or completion order. MISE is the
replication mean of the ISE.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .distributions import MixtureSpec, RefDistribution, exact_g, make_rng, mix_z, sample_x
from .ecf import EmpiricalCF
from .errors import DeconvolutionError
from .estimator import (
    DensityEstimate,
    EstimatorConfig,
    density_estimate,
    format_float,
    ise,
    outside_l2_mass,
)

__all__ = [
    "GridSpec",
    "ExperimentPlan",
    "RepResult",
    "NSummary",
    "MiseReport",
    "RateFit",
    "run_replication",
    "run_experiment",
    "rate_study",
    "corollary_exponent",
]


@dataclass(frozen=True)
class GridSpec:
    lo: float = -25.0
    hi: float = 25.0
    points: int = 2001

    def __post_init__(self):
        if not self.hi > self.lo or self.points < 2:
            raise ValueError("grid needs hi > lo and at least 2 points")

    def array(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class ExperimentPlan:
    dist: RefDistribution
    mix: MixtureSpec
    n_values: tuple
    reps: int
    config: EstimatorConfig = field(default_factory=EstimatorConfig)
    master_seed: int = 2003
    grid: GridSpec = field(default_factory=GridSpec)
    oracle: bool = False

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_values)
        object.__setattr__(self, "n_values", ns)
        if not ns:
            raise ValueError("n_values is empty")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("n_values must be strictly increasing")
        if ns[0] < 2:
            raise ValueError("sample sizes must be at least 2")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not self.dist.has_density:
            raise ValueError(f"{self.dist.name} has no evaluable density for ISE")


@dataclass(frozen=True)
class RepResult:
    n: int
    rep: int
    ise: float
    inv_h: float
    crossed: bool
    clamps: int
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass(frozen=True)
class NSummary:
    n: int
    mise: float
    median_ise: float
    stderr: float
    excluded: int


def _estimate(plan: ExperimentPlan, n: int, rep: int) -> DensityEstimate:
    grid = plan.grid.array()
    if plan.oracle:
        g = lambda t: exact_g(plan.dist, plan.mix, t)  # noqa: E731
        return density_estimate(g, grid, plan.config, gamma=plan.mix.gamma, n=n)
    rng = make_rng(plan.master_seed, n, rep)
    x = sample_x(plan.dist, n, rng)
    y = sample_x(plan.dist, n, rng)
    ecf = EmpiricalCF(mix_z(x, y, plan.mix), plan.mix.beta, plan.mix)
    return density_estimate(ecf, grid, plan.config)


def run_replication(plan: ExperimentPlan, n: int, rep: int, keep_estimate=False):
    """One cell of the experiment; pipeline failures become an error record."""
    try:
        est = _estimate(plan, n, rep)
    except DeconvolutionError as exc:
        res = RepResult(n, rep, math.nan, math.nan, False, 0, f"{type(exc).__name__}: {exc}")
        return (res, None) if keep_estimate else res
    res = RepResult(n, rep, ise(est, plan.dist.density), est.cutoff.inv_h,
                    est.cutoff.crossed, est.clamps)
    return (res, est) if keep_estimate else res


def _cell(args):
    plan, n, rep = args
    return run_replication(plan, n, rep)


@dataclass(frozen=True)
class MiseReport:
    plan: ExperimentPlan
    reps: tuple
    summaries: tuple
    truncation_l2: float

    def summary(self, n: int) -> NSummary:
        for s in self.summaries:
            if s.n == n:
                return s
        raise KeyError(n)

    def reps_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,rep,ise,inv_h,crossed,clamps\n")
        for r in self.reps:
            buf.write(f"{r.n},{r.rep},{format_float(r.ise)},{format_float(r.inv_h)},"
                      f"{str(r.crossed).lower()},{r.clamps}\n")
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,mise,median_ise,stderr,excluded\n")
        for s in self.summaries:
            buf.write(f"{s.n},{format_float(s.mise)},{format_float(s.median_ise)},"
                      f"{format_float(s.stderr)},{s.excluded}\n")
        return buf.getvalue()

    def notes(self) -> dict:
        errors = [f"n={r.n} rep={r.rep}: {r.error}" for r in self.reps if not r.ok]
        return {
            "truncation_l2": self.truncation_l2,
            "truncation_note": (f"ISE integrates over [{self.plan.grid.lo}, {self.plan.grid.hi}]; "
                                f"the true density carries {self.truncation_l2:.3e} of "
                                "squared L2 mass outside"),
            "mise_definition": "replication mean of ISE",
            "errors": "; ".join(errors) if errors else "none",
        }


def _summarize(n, results):
    good = np.array([r.ise for r in results if r.ok])
    excluded = len(results) - good.size
    if good.size == 0:
        return NSummary(n, math.nan, math.nan, math.nan, excluded)
    se = float(good.std(ddof=1) / math.sqrt(good.size)) if good.size > 1 else 0.0
    return NSummary(n, float(good.mean()), float(np.median(good)), se, excluded)


def run_experiment(plan: ExperimentPlan, threads: int = 1) -> MiseReport:
    """Run every (n, rep) cell; ``threads`` caps the worker processes."""
    cells = [(plan, n, rep) for n in plan.n_values for rep in range(plan.reps)]
    if threads > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_cell, cells, chunksize=max(1, len(cells) // (4 * threads))))
    else:
        results = [_cell(c) for c in cells]
    summaries = tuple(_summarize(n, [r for r in results if r.n == n]) for n in plan.n_values)
    trunc = outside_l2_mass(plan.dist.density, plan.grid.lo, plan.grid.hi)
    return MiseReport(plan, tuple(results), summaries, trunc)


def corollary_exponent(a: float, gamma: float, delta: float = 0.0) -> float:
    """Polynomial exponent of the stable-law MISE bound (``delta -> 0`` by default).

    Reported only; at desk-scale ``n`` it is not identifiable from data.
    """
    if not 0 <= delta < a:
        raise ValueError("delta must lie in [0, a)")
    denom = 2.0 + gamma ** (1.0 / a) - math.log(2.0) / ((a - delta) * math.log(gamma))
    return -1.0 / denom


@dataclass(frozen=True)
class RateFit:
    n: np.ndarray
    mise: np.ndarray
    slope: float
    slope_halfwidth: float
    intercept: float
    residual: float
    log_slope: float
    log_slope_halfwidth: float
    log_intercept: float
    log_residual: float

    @property
    def power_law_preferred(self) -> bool:
        return self.residual < self.log_residual

    def to_csv(self) -> str:
        rows = [
            ("power", "log(n)", self.slope, self.slope_halfwidth, self.intercept, self.residual),
            ("logarithmic", "log(log(n))", self.log_slope, self.log_slope_halfwidth,
             self.log_intercept, self.log_residual),
        ]
        buf = io.StringIO()
        buf.write("model,regressor,slope,halfwidth95,intercept,rss\n")
        for name, reg, *vals in rows:
            buf.write(",".join([name, reg] + [format_float(v) for v in vals]) + "\n")
        return buf.getvalue()


def _fit(x, y):
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    dof = x.size - 2
    half = float(stats.t.ppf(0.975, dof) * res.stderr) if dof > 0 else math.inf
    return float(res.slope), half, float(res.intercept), float(resid @ resid)


def rate_study(report_or_n, mise=None) -> RateFit:
    """Least-squares fits of ``log MISE`` on ``log n`` and on ``log log n``.

    Accepts a :class:`MiseReport` or explicit ``(n_values, mise_values)``.
    """
    if isinstance(report_or_n, MiseReport):
        pairs = [(s.n, s.mise) for s in report_or_n.summaries if math.isfinite(s.mise)]
        n = np.array([p[0] for p in pairs], dtype=float)
        m = np.array([p[1] for p in pairs], dtype=float)
    else:
        n = np.asarray(report_or_n, dtype=float)
        m = np.asarray(mise, dtype=float)
    if np.unique(n).size < 3:
        raise ValueError("rate_study needs at least 3 distinct sample sizes")
    if np.any(m <= 0) or np.any(n <= 1):
        raise ValueError("need MISE > 0 and n > 1")
    ly = np.log(m)
    power = _fit(np.log(n), ly)
    logarithmic = _fit(np.log(np.log(n)), ly)
    return RateFit(n, m, *power, *logarithmic)
