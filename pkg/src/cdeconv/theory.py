"""Numerical counterparts of the auxiliary inequalities and the CLT limit.

* ``lemma1_bound``: lower bound ``1 - c(r) beta_r |t|^r`` for real CFs.
* ``lemma2_bound``: bound on ``|log f(t)|`` near the origin.
* ``lemma3_bound``: exponential part of the ECF sup-deviation bound.
* ``limit_cov`` / ``series_variance``: covariance of the limiting Gaussian
  process of ``sqrt(n)(g_n - g)`` and the variance of the real part of the
  limit of ``sqrt(n)(f_hat - f)``.

The ``*_sweep`` and ``*_check`` helpers run these against the reference
distributions and produce rows for the ``family,r,t,lhs,rhs,slack`` CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    Cauchy,
    Gaussian,
    MixtureSpec,
    RefDistribution,
    TwoPoint,
    exact_g,
    make_rng,
    mix_z,
    sample_x,
)
from .ecf import EmpiricalCF, sup_deviation
from .estimator import product_cf

__all__ = [
    "LemmaConstant",
    "CovMatrix2x2",
    "DeviationBound",
    "Lemma2Result",
    "SweepRow",
    "lemma1_bound",
    "cos_inequality_check",
    "lemma2_bound",
    "lemma3_bound",
    "lemma3_bound_for",
    "limit_cov",
    "series_variance",
    "lemma1_sweep",
    "lemma2_sweep",
    "cos_inequality_sweep",
    "lemma3_exceedance",
    "theorem1_check",
    "LEMMA1_FAMILIES",
    "LEMMA2_FAMILIES",
]


@dataclass(frozen=True)
class LemmaConstant:
    """``c(r) = 2 / (2r)^(r/2)`` for ``r`` in ``(0, 2]``."""

    r: float

    def __post_init__(self):
        if not 0 < self.r <= 2:
            raise ValueError(f"r must lie in (0, 2], got {self.r}")

    @property
    def value(self) -> float:
        return 2.0 / (2.0 * self.r) ** (self.r / 2.0)


def lemma1_bound(c: LemmaConstant, beta_r: float, t):
    if not (math.isfinite(beta_r) and beta_r >= 0):
        raise ValueError("beta_r must be finite and non-negative")
    return 1.0 - c.value * beta_r * np.abs(t) ** c.r


def cos_inequality_check(r: float, x_grid):
    """Check ``cos x >= 1 - c(r) x^r`` on ``x_grid``; returns ``(ok, worst_slack)``."""
    c = LemmaConstant(r)
    x = np.asarray(x_grid, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x_grid must be positive")
    slack = np.cos(x) - (1.0 - c.value * x**r)
    worst = float(slack.min())
    return worst >= 0.0, worst


@dataclass(frozen=True)
class Lemma2Result:
    bound: float
    in_range: bool


def lemma2_radius(r: float, beta_r: float) -> float:
    # 1 / (2 (10 c(r) beta_r)^(1/r)): the whole root sits in the denominator
    return 1.0 / (2.0 * (10.0 * LemmaConstant(r).value * beta_r) ** (1.0 / r))


def lemma2_bound(r: float, beta_r: float, t: float) -> Lemma2Result:
    if not (math.isfinite(beta_r) and beta_r > 0):
        raise ValueError("beta_r must be finite and positive")
    c = LemmaConstant(r).value
    bound = 2 * math.pi * math.sqrt(2**r * abs(t) ** r * c * beta_r)
    return Lemma2Result(bound, abs(t) < lemma2_radius(r, beta_r))


@dataclass(frozen=True)
class DeviationBound:
    """``2 (1 + a Theta) exp(-n b^2 / 144)``; the ``nu_r / n`` term is left out."""

    n: int
    a: float
    b: float
    r: float
    beta: float
    theta: float
    bound: float
    omitted_terms: tuple = field(default=("nu_r/n",))


def lemma3_bound(n: int, a: float, b: float, r: float, beta: float) -> DeviationBound:
    """Exponential part of the bound on ``P(sup_{|t|<a} |f_n - f| > b)``.

    ``beta`` is the absolute moment the branch asks for: ``E|X|^r`` when
    ``r <= 1`` and ``E|X|^(r/2)`` when ``1 < r <= 2``.
    """
    if not 0 < r <= 2:
        raise ValueError(f"r must lie in (0, 2], got {r}")
    if not 0 < b <= 2:
        raise ValueError(f"b must lie in (0, 2], got {b}")
    if n < 1 or not a > 0:
        raise ValueError("need n >= 1 and a > 0")
    if r <= 1:
        theta = beta ** (1 / r) * n ** ((2 - r) / r) / b ** (1 / r)
    else:
        theta = beta ** (2 / r) * n ** (1 / r) / b ** (2 / r)
    bound = 2.0 * (1.0 + a * theta) * math.exp(-n * b * b / 144.0)
    return DeviationBound(n, a, b, r, beta, theta, bound)


def lemma3_bound_for(dist: RefDistribution, n, a, b, r) -> DeviationBound:
    order = r if r <= 1 else r / 2
    return lemma3_bound(n, a, b, r, dist.abs_moment(order).beta_r)


@dataclass(frozen=True)
class CovMatrix2x2:
    uu: float
    uv: float
    vu: float
    vv: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.uu, self.uv], [self.vu, self.vv]])


def limit_cov(g, t: float, s: float) -> CovMatrix2x2:
    """Cross-covariance of ``(U(t), V(t))`` and ``(U(s), V(s))``, ``Y = U + iV``."""
    vals = np.asarray(g(np.array([t - s, t + s, t, s], dtype=float)), dtype=complex)
    dm, dp, ut, us = (float(x) for x in vals.real)
    vdm, vdp, vt, vs = (float(x) for x in vals.imag)
    return CovMatrix2x2(
        uu=0.5 * (dm + dp) - ut * us,
        uv=0.5 * (-vdm + vdp) - ut * vs,
        vu=0.5 * (vdm + vdp) - vt * us,
        vv=0.5 * (dm - dp) - vt * vs,
    )


def series_variance(g, f, gamma: float, t: float, K: int | None = None,
                    tol: float = 1e-8, max_terms: int = 400) -> float:
    """Variance of ``Re`` of ``f(t) sum_k (-1)^k Y(gamma^k t) / g(gamma^k t)``.

    Real (symmetric) ``g`` and ``f`` only. With ``K=None`` terms are added
    until the last increment falls below ``tol`` twice in a row.
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if t == 0:
        return 0.0
    ft = complex(np.asarray(f(np.array([t])))[0])
    if abs(ft.imag) > 1e-12:
        raise ValueError("series_variance supports real characteristic functions only")

    def weight(i):
        gi = complex(np.asarray(g(np.array([gamma**i * t])))[0])
        if gi == 0:
            raise ValueError(f"g vanishes at gamma^{i} t")
        return (-1) ** i / gi.real

    def cross(i, j):
        return limit_cov(g, gamma**i * t, gamma**j * t).uu

    weights = []
    total = 0.0
    increments = []
    limit = K if K is not None else max_terms
    for k in range(limit + 1):
        weights.append(weight(k))
        inc = weights[k] ** 2 * cross(k, k)
        inc += 2.0 * sum(weights[i] * weights[k] * cross(i, k) for i in range(k))
        total += inc
        if K is not None:
            continue
        increments.append(abs(inc))
        if len(increments) >= 2 and increments[-1] < tol and increments[-2] < tol:
            break
        if len(increments) >= 6 and all(
                increments[-m] > increments[-m - 1] > 0 for m in range(1, 5)):
            raise ValueError("series does not converge: increments keep growing")
    else:
        if K is None:
            raise ValueError(f"series did not reach tol={tol} within {max_terms} terms")
    return float(ft.real**2 * total)


@dataclass(frozen=True)
class SweepRow:
    family: str
    r: float
    t: float
    lhs: float
    rhs: float
    slack: float

    def as_csv(self) -> str:
        return ",".join([self.family] + [repr(float(v)) for v in
                                         (self.r, self.t, self.lhs, self.rhs, self.slack)])


LEMMA1_FAMILIES = (
    (Gaussian(1.0), (0.5, 1.0, 2.0)),
    (Cauchy(1.0), (0.25, 0.5, 0.75)),
    (TwoPoint(), (0.5, 1.0, 2.0)),
)
LEMMA2_FAMILIES = (
    (Gaussian(1.0), (0.5, 1.0, 2.0)),
    (TwoPoint(), (0.5, 1.0, 2.0)),
)


def lemma1_sweep(families=LEMMA1_FAMILIES, t_grid=None):
    """Rows with ``lhs = f(t)``, ``rhs = 1 - c(r) beta_r |t|^r``, ``slack = lhs - rhs``."""
    if t_grid is None:
        t_grid = np.linspace(-10.0, 10.0, 200)
    rows = []
    for dist, orders in families:
        f = dist.cf(t_grid).real
        for r in orders:
            beta_r = dist.abs_moment(r).beta_r
            rhs = lemma1_bound(LemmaConstant(r), beta_r, t_grid)
            rows.extend(SweepRow(dist.name, r, t, lhs, b, lhs - b)
                        for t, lhs, b in zip(t_grid, f, rhs))
    return rows


def lemma2_sweep(families=LEMMA2_FAMILIES, points=200):
    """Rows over the in-range set ``|t| < radius``; ``slack = bound - |log f(t)|``."""
    rows = []
    for dist, orders in families:
        for r in orders:
            beta_r = dist.abs_moment(r).beta_r
            radius = lemma2_radius(r, beta_r)
            t_grid = np.linspace(-radius, radius, points + 2)[1:-1]
            lhs = np.abs(np.log(dist.cf(t_grid)))
            for t, left in zip(t_grid, lhs):
                res = lemma2_bound(r, beta_r, t)
                rows.append(SweepRow(dist.name, r, t, float(left), res.bound,
                                     res.bound - float(left)))
    return rows


def cos_inequality_sweep(orders=(0.25, 0.5, 1.0, 1.5, 2.0), x_grid=None):
    if x_grid is None:
        x_grid = np.logspace(-2, 2, 1000)
    rows = []
    for r in orders:
        c = LemmaConstant(r).value
        lhs = np.cos(x_grid)
        rhs = 1.0 - c * x_grid**r
        rows.extend(SweepRow("cos", r, x, a, b, a - b)
                    for x, a, b in zip(x_grid, lhs, rhs))
    return rows


@dataclass(frozen=True)
class ExceedanceResult:
    frequency: float
    exceedances: int
    reps: int
    bound: DeviationBound
    sup_values: np.ndarray

    @property
    def consistent(self) -> bool:
        """Frequency within the bound whenever the bound is informative."""
        return self.bound.bound >= 1 or self.frequency <= self.bound.bound


def lemma3_exceedance(dist: RefDistribution, n: int, a: float, b: float, r: float,
                      reps: int, seed: int, step: float = 0.005) -> ExceedanceResult:
    """Monte Carlo frequency of ``sup_{|t|<=a} |f_n - f| > b`` for X itself."""
    sups = np.empty(reps)
    for rep in range(reps):
        x = sample_x(dist, n, make_rng(seed, rep))
        sups[rep] = sup_deviation(EmpiricalCF(x), dist.cf, a, step)
    hits = int((sups > b).sum())
    return ExceedanceResult(hits / reps, hits, reps, lemma3_bound_for(dist, n, a, b, r), sups)


@dataclass(frozen=True)
class Theorem1Result:
    empirical_var: float
    series_var: float
    depth: int
    reps: int
    n: int

    @property
    def ratio(self) -> float:
        return self.empirical_var / self.series_var


def theorem1_check(dist: RefDistribution, mix: MixtureSpec, t: float, n: int,
                   reps: int, seed: int, depth: int | None = None) -> Theorem1Result:
    """Compare ``Var[sqrt(n)(Re f_hat(t) - f(t))]`` with :func:`series_variance`.

    The infinite product is stood in for by the smallest depth with
    ``gamma^(2N+2) < 1e-6`` unless ``depth`` is given.
    """
    gamma = mix.gamma
    if depth is None:
        depth = max(0, math.ceil(math.log(1e-6) / (2 * math.log(gamma)) - 1))
        while gamma ** (2 * depth + 2) >= 1e-6:
            depth += 1
    f_t = float(dist.cf(t).real)
    draws = np.empty(reps)
    for rep in range(reps):
        rng = make_rng(seed, rep)
        z = mix_z(sample_x(dist, n, rng), sample_x(dist, n, rng), mix)
        ecf = EmpiricalCF(z, mix.beta, mix)
        fhat = product_cf(ecf, t, depth, gamma)
        draws[rep] = math.sqrt(n) * (fhat.real - f_t)
    g = lambda s: exact_g(dist, mix, s)  # noqa: E731
    sv = series_variance(g, dist.cf, gamma, t)
    return Theorem1Result(float(draws.var(ddof=1)), sv, depth, reps, n)
