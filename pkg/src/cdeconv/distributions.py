"""Reference distributions and the Z = alpha*X + beta*Y mixer.

Every distribution here is symmetric about zero, so its characteristic
function is real. Samplers draw from a ``numpy.random.Generator``; use
:func:`make_rng` to obtain reproducible per-stream generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

__all__ = [
    "RefDistribution",
    "Cauchy",
    "Gaussian",
    "SymmetricStable",
    "TwoPoint",
    "MomentSpec",
    "MixtureSpec",
    "make_rng",
    "sample_x",
    "mix_z",
    "exact_cf",
    "exact_g",
    "abs_moment",
    "distribution_from_name",
]


def make_rng(seed, *stream) -> np.random.Generator:
    """Generator keyed by ``(seed, *stream)``.

    Streams with different keys are statistically independent and do not
    depend on the order in which they are created, so replications can be
    scheduled in any order.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class MomentSpec:
    """Absolute moment ``E|X|^r``; ``beta_r`` is ``math.inf`` when it diverges."""

    r: float
    beta_r: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.beta_r)


def _check_order(r):
    if not 0 < r <= 2:
        raise ValueError(f"moment order r must lie in (0, 2], got {r}")


class RefDistribution:
    """Base class: symmetric law with closed-form characteristic function."""

    name = "base"

    def cf(self, t):
        raise NotImplementedError

    def sample(self, n, rng):
        raise NotImplementedError

    def abs_moment(self, r) -> MomentSpec:
        raise NotImplementedError

    def density(self, x):
        raise NotImplementedError(f"{self.name} has no closed-form density here")

    @property
    def has_density(self) -> bool:
        try:
            self.density(np.zeros(1))
        except NotImplementedError:
            return False
        return True

    def params(self) -> dict:
        """Flat key=value description used in run preambles."""
        return {"dist": self.name}


@dataclass(frozen=True)
class Cauchy(RefDistribution):
    scale: float = 1.0
    name = "cauchy"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("Cauchy scale must be positive")

    def cf(self, t):
        return np.exp(-self.scale * np.abs(t)).astype(complex)

    def sample(self, n, rng):
        return self.scale * rng.standard_cauchy(n)

    def abs_moment(self, r):
        # E|X|^r = sec(pi r / 2) * scale^r for r < 1, infinite otherwise
        _check_order(r)
        if r >= 1:
            return MomentSpec(r, math.inf)
        return MomentSpec(r, self.scale**r / math.cos(math.pi * r / 2))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        s = self.scale
        return s / (np.pi * (s * s + x * x))

    def params(self):
        return {"dist": self.name, "scale": self.scale}


@dataclass(frozen=True)
class Gaussian(RefDistribution):
    sigma: float = 1.0
    name = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("Gaussian sigma must be positive")

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-0.5 * (self.sigma * t) ** 2).astype(complex)

    def sample(self, n, rng):
        return self.sigma * rng.standard_normal(n)

    def abs_moment(self, r):
        _check_order(r)
        value = self.sigma**r * 2 ** (r / 2) * gamma_fn((r + 1) / 2) / math.sqrt(math.pi)
        return MomentSpec(r, float(value))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        s = self.sigma
        return np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi))

    def params(self):
        return {"dist": self.name, "scale": self.sigma}


@dataclass(frozen=True)
class SymmetricStable(RefDistribution):
    """Symmetric stable law with ``cf(t) = exp(-b |t|^a)``."""

    a: float = 1.0
    b: float = 1.0
    name = "stable"

    def __post_init__(self):
        if not 0 < self.a <= 2:
            raise ValueError("stability exponent a must lie in (0, 2]")
        if not self.b > 0:
            raise ValueError("stable scale b must be positive")

    def cf(self, t):
        return np.exp(-self.b * np.abs(t) ** self.a).astype(complex)

    def sample(self, n, rng):
        # Chambers-Mallows-Stuck, symmetric case; yields cf exp(-|t|^a)
        a = self.a
        v = rng.uniform(-np.pi / 2, np.pi / 2, n)
        w = rng.standard_exponential(n)
        if a == 1:
            s = np.tan(v)
        else:
            s = (np.sin(a * v) / np.cos(v) ** (1 / a)
                 * (np.cos((1 - a) * v) / w) ** ((1 - a) / a))
        return self.b ** (1 / self.a) * s

    def abs_moment(self, r):
        _check_order(r)
        a, b = self.a, self.b
        if a == 2:
            return Gaussian(math.sqrt(2 * b)).abs_moment(r)
        if r >= a:
            return MomentSpec(r, math.inf)
        value = (b ** (r / a) * 2**r * gamma_fn((1 + r) / 2) * gamma_fn(1 - r / a)
                 / (math.sqrt(math.pi) * gamma_fn(1 - r / 2)))
        return MomentSpec(r, float(value))

    def density(self, x):
        if self.a == 1:
            return Cauchy(self.b).density(x)
        if self.a == 2:
            return Gaussian(math.sqrt(2 * self.b)).density(x)
        return super().density(x)

    def params(self):
        return {"dist": self.name, "scale": self.b, "stable_a": self.a}


@dataclass(frozen=True)
class TwoPoint(RefDistribution):
    """Mass 1/2 at each of -1 and +1."""

    name = "twopoint"

    def cf(self, t):
        return np.cos(np.asarray(t, dtype=float)).astype(complex)

    def sample(self, n, rng):
        return 2.0 * rng.integers(0, 2, n) - 1.0

    def abs_moment(self, r):
        _check_order(r)
        return MomentSpec(r, 1.0)


def distribution_from_name(name, scale=1.0, stable_a=None) -> RefDistribution:
    name = name.lower()
    if name == "cauchy":
        return Cauchy(scale)
    if name in ("gaussian", "normal"):
        return Gaussian(scale)
    if name == "stable":
        return SymmetricStable(1.0 if stable_a is None else stable_a, scale)
    if name == "twopoint":
        return TwoPoint()
    raise ValueError(f"unknown distribution {name!r}")


@dataclass(frozen=True)
class MixtureSpec:
    """Weights of ``Z = alpha*X + beta*Y``; requires ``0 < alpha < beta``."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if not self.alpha < self.beta:
            raise ValueError("alpha must be smaller than beta (gamma in (0, 1))")

    @property
    def gamma(self) -> float:
        return self.alpha / self.beta

    @classmethod
    def from_gamma(cls, gamma, beta=1.0):
        if not 0 < gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
        return cls(gamma * beta, beta)


def sample_x(dist: RefDistribution, n: int, seed) -> np.ndarray:
    """Draw ``n`` i.i.d. values from ``dist``.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return np.asarray(dist.sample(int(n), rng), dtype=float)


def mix_z(x, y, mix: MixtureSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"x and y differ in shape: {x.shape} vs {y.shape}")
    return mix.alpha * x + mix.beta * y


def exact_cf(dist: RefDistribution, t):
    """Closed-form characteristic function; scalar in, scalar out."""
    out = dist.cf(t)
    return complex(out) if np.ndim(out) == 0 else out


def exact_g(dist: RefDistribution, mix: MixtureSpec, t):
    """Characteristic function of ``Z / beta``, i.e. ``f(t) f(gamma t)``."""
    t = np.asarray(t, dtype=float)
    out = dist.cf(t) * dist.cf(mix.gamma * t)
    return complex(out) if out.ndim == 0 else out


def abs_moment(dist: RefDistribution, r: float) -> MomentSpec:
    return dist.abs_moment(r)
