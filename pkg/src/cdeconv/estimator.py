"""Product CF estimator, spectral cutoff and Fourier-inversion density estimate.

Given ``g(t) = f(t) f(gamma t)``, the characteristic function of X telescopes
as ``f(t) = prod_k g(gamma^(2k) t) / g(gamma^(2k+1) t)``. Replacing ``g`` by
the ECF of ``Z/beta``, truncating the product at depth ``N`` and inverting on
``[-1/h, 1/h]`` gives a sinc-kernel density estimate of X.

Functions that take a ``cf`` accept any callable mapping a float array of
frequencies to a complex array: an :class:`~cdeconv.ecf.EmpiricalCF` or an
exact characteristic function (oracle runs).
"""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import integrate

from .errors import DegenerateCutoffError, DegenerateEstimateError, NonFiniteResultError

__all__ = [
    "EstimatorConfig",
    "CutoffResult",
    "DensityEstimate",
    "product_cf",
    "select_cutoff",
    "default_scan_step",
    "simpson_weights",
    "fourier_invert",
    "truncated_inversion",
    "density_estimate",
    "correct_density",
    "ise",
    "outside_l2_mass",
    "format_float",
]

_SCAN_BLOCK = 1024


def format_float(v) -> str:
    """Round-trippable decimal form used in every CSV we write."""
    return repr(float(v))


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning of the estimator.

    ``N=None`` selects ``ceil(nu * log n)``; ``eps_floor=None`` selects
    ``eps_n / 2``; ``scan_step=None`` picks a data-driven step; ``cutoff``
    pins ``1/h`` instead of scanning.
    """

    N: int | None = None
    A: float = 2.0
    zeta: float = 1.0
    nu: float = 1.0
    a_exponent: float = 1.0
    eps_floor: float | None = None
    panels: int = 2048
    scan_step: float | None = None
    cutoff: float | None = None

    def __post_init__(self):
        if self.N is not None and (int(self.N) != self.N or self.N < 0):
            raise ValueError("N must be a non-negative integer")
        if not self.A > 0:
            raise ValueError("A must be positive")
        if not (self.zeta > 0 and self.nu > 0):
            raise ValueError("zeta and nu must be positive")
        if not 0 < self.a_exponent <= 2:
            raise ValueError("a_exponent must lie in (0, 2]")
        if self.eps_floor is not None and self.eps_floor < 0:
            raise ValueError("eps_floor must be non-negative")
        if self.panels < 8 or self.panels % 2:
            raise ValueError("panels must be even and at least 8")
        if self.scan_step is not None and not self.scan_step > 0:
            raise ValueError("scan_step must be positive")
        if self.cutoff is not None and not self.cutoff > 0:
            raise ValueError("cutoff must be positive")

    def depth(self, n: int) -> int:
        if self.N is not None:
            return int(self.N)
        return max(0, math.ceil(self.nu * math.log(n)))

    def eps_n(self, n: int) -> float:
        return self.A * math.sqrt(math.log(n) / n)

    def c_n(self, n: int) -> float:
        return (self.zeta * math.log(n)) ** (1.0 / self.a_exponent)


@dataclass(frozen=True)
class CutoffResult:
    eps_n: float
    c_n: float
    inv_h: float
    crossed: bool
    scan_step: float = math.nan
    d_n: float | None = None


@dataclass(frozen=True)
class DensityEstimate:
    grid_x: np.ndarray
    values: np.ndarray
    cutoff: CutoffResult
    config: EstimatorConfig
    depth: int = 0
    clamps: int = 0
    corrected: bool = False

    def integral(self) -> float:
        return float(integrate.trapezoid(self.values, self.grid_x))

    def preamble(self) -> dict:
        out = {f"cutoff.{k}": v for k, v in asdict(self.cutoff).items()}
        out.update({f"config.{k}": v for k, v in asdict(self.config).items()})
        out.update(depth=self.depth, clamps=self.clamps, corrected=self.corrected)
        return out

    def to_csv(self, fh=None, extra_preamble=None) -> str:
        """Write ``x,p_hat`` rows behind a ``# key=value`` preamble."""
        buf = io.StringIO()
        for key, val in {**(extra_preamble or {}), **self.preamble()}.items():
            buf.write(f"# {key}={_preamble_value(val)}\n")
        buf.write("x,p_hat\n")
        for x, p in zip(self.grid_x, self.values):
            buf.write(f"{format_float(x)},{format_float(p)}\n")
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def _preamble_value(v):
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def _phase_clamp(den, floor):
    mag = np.abs(den)
    low = mag < floor
    if not low.any():
        return den, 0
    den = den.copy()
    nz = low & (mag > 0)
    den[nz] = den[nz] / mag[nz] * floor
    den[low & (mag == 0)] = floor
    return den, int(low.sum())


def product_cf(cf, t, N: int, gamma: float, eps_floor: float = 0.0,
               return_clamps: bool = False):
    """Truncated product ``prod_{k=0}^{N} cf(gamma^2k t) / cf(gamma^(2k+1) t)``.

    Denominators with modulus below ``eps_floor`` are pushed out to
    ``eps_floor`` keeping their phase. With ``eps_floor=0`` an exactly-zero
    denominator raises :class:`NonFiniteResultError`.
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if N < 0:
        raise ValueError("N must be non-negative")
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.ones(t.shape, dtype=complex)
    clamps = 0
    for k in range(N + 1):
        num = np.asarray(cf(gamma ** (2 * k) * t), dtype=complex)
        den = np.asarray(cf(gamma ** (2 * k + 1) * t), dtype=complex)
        if eps_floor > 0:
            den, c = _phase_clamp(den, eps_floor)
            clamps += c
        elif np.any(den == 0):
            raise NonFiniteResultError(k)
        out *= num / den
    if scalar:
        out = complex(out[0])
    return (out, clamps) if return_clamps else out


def default_scan_step(cf, eps_n: float, c_n: float) -> float:
    """Largest step whose ECF modulus-of-continuity bound is <= 0.1 eps_n.

    Callables without a ``modulus_of_continuity`` method get ``c_n / 2048``.
    """
    fallback = c_n / 2048
    if not hasattr(cf, "modulus_of_continuity"):
        return fallback
    target = 0.1 * eps_n
    lo, hi = 0.0, fallback
    if cf.modulus_of_continuity(hi) <= target:
        return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if cf.modulus_of_continuity(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo if lo > 0 else hi * 1e-3


def select_cutoff(cf, n: int, config: EstimatorConfig, scan_step=None,
                  exact=None) -> CutoffResult:
    """Spectral cutoff ``1/h = min(theta*, c_n)``.

    ``theta*`` is the last scan point before the first point where
    ``|cf| <= eps_n``; scanning starts at ``scan_step`` and stops at ``c_n``.
    When ``exact`` is given, ``d_n = inf_{|s| < c_n} |exact(s)|`` is recorded.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    eps = config.eps_n(n)
    cn = config.c_n(n)
    step = scan_step if scan_step is not None else config.scan_step
    if step is None:
        step = default_scan_step(cf, eps, cn)
    if not step > 0:
        raise ValueError("scan_step must be positive")
    d_n = None
    if exact is not None:
        d_n = float(np.abs(exact(np.linspace(0.0, cn, 1025))).min())

    last = int(math.floor(cn / step * (1 + 1e-12)))
    j = 1
    while j <= last:
        hi = min(last, j + _SCAN_BLOCK - 1)
        idx = np.arange(j, hi + 1)
        below = np.flatnonzero(np.abs(cf(step * idx)) <= eps)
        if below.size:
            first = int(idx[below[0]])
            if first == 1:
                raise DegenerateCutoffError(
                    f"|g_n({step:g})| <= eps_n={eps:g}; increase n or decrease A")
            theta = (first - 1) * step
            return CutoffResult(eps, cn, min(theta, cn), theta < cn, step, d_n)
        j = hi + 1
    return CutoffResult(eps, cn, cn, False, step, d_n)


def simpson_weights(panels: int, width: float) -> np.ndarray:
    if panels < 2 or panels % 2:
        raise ValueError("Simpson needs an even number of panels")
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (width / panels / 3.0)


def fourier_invert(cf_values, T: float, x) -> np.ndarray:
    """``(1/pi) int_0^T Re[exp(-itx) phi(t)] dt`` by composite Simpson.

    ``cf_values`` holds ``phi`` on ``linspace(0, T, M + 1)``. Folding the
    symmetric interval onto ``[0, T]`` relies on ``phi(-t) = conj(phi(t))``
    and makes the result real by construction.
    """
    cf_values = np.asarray(cf_values, dtype=complex)
    M = cf_values.size - 1
    t = np.linspace(0.0, T, M + 1)
    w = simpson_weights(M, T)
    wr = w * cf_values.real
    wi = w * cf_values.imag
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty(flat.size)
    rows = max(1, (1 << 21) // t.size)
    for lo in range(0, flat.size, rows):
        phase = np.multiply.outer(flat[lo:lo + rows], t)
        out[lo:lo + rows] = np.cos(phase) @ wr + np.sin(phase) @ wi
    return (out / np.pi).reshape(x.shape)


def truncated_inversion(cf, T: float, x, panels: int = 2048) -> np.ndarray:
    """Invert an arbitrary Hermitian ``cf`` over ``[-T, T]``."""
    t = np.linspace(0.0, T, panels + 1)
    return fourier_invert(np.asarray(cf(t), dtype=complex), T, x)


def _check_extent(grid_x, T, panels):
    # at least four Simpson panels per oscillation of exp(-itx)
    limit = math.pi * panels / (2.0 * T)
    xmax = float(np.abs(grid_x).max()) if grid_x.size else 0.0
    if xmax > limit:
        raise ValueError(
            f"|x| up to {xmax:g} is too oscillatory for {panels} panels on "
            f"[0, {T:g}]; keep |x| <= {limit:g} or raise panels")


def density_estimate(cf, grid_x, config: EstimatorConfig, gamma=None, n=None,
                     exact=None) -> DensityEstimate:
    """Sinc-kernel density estimate of X on ``grid_x``.

    ``gamma`` and ``n`` default to the mixture ratio and sample size of an
    :class:`~cdeconv.ecf.EmpiricalCF` built from a sample.
    """
    if gamma is None:
        mix = getattr(cf, "mix", None)
        if mix is None:
            raise ValueError("gamma is required when cf carries no mixture")
        gamma = mix.gamma
    if n is None:
        n = getattr(cf, "n", None)
        if n is None:
            raise ValueError("n is required when cf is not an EmpiricalCF")
    grid_x = np.asarray(grid_x, dtype=float)
    if not np.all(np.isfinite(grid_x)):
        raise ValueError("grid_x must be finite")

    if config.cutoff is not None:
        eps = config.eps_n(n) if n >= 2 else math.nan
        cn = config.c_n(n) if n >= 2 else math.inf
        cutoff = CutoffResult(eps, cn, config.cutoff, False)
    else:
        cutoff = select_cutoff(cf, n, config, exact=exact)
    T = cutoff.inv_h
    _check_extent(grid_x, T, config.panels)

    depth = config.depth(n)
    floor = config.eps_floor
    if floor is None:
        floor = 0.5 * cutoff.eps_n if math.isfinite(cutoff.eps_n) else 0.0
    t = np.linspace(0.0, T, config.panels + 1)
    fhat, clamps = product_cf(cf, t, depth, gamma, floor, return_clamps=True)
    if not np.all(np.isfinite(fhat)):
        raise NonFiniteResultError(-1, "non-finite product CF on the quadrature grid")
    values = fourier_invert(fhat, T, grid_x)
    return DensityEstimate(grid_x, values, cutoff, config, depth, clamps)


def correct_density(est: DensityEstimate) -> DensityEstimate:
    """Clip negative values and renormalize to unit trapezoid mass."""
    values = np.clip(est.values, 0.0, None)
    mass = integrate.trapezoid(values, est.grid_x)
    if not mass > 0:
        raise DegenerateEstimateError("estimate vanishes after clipping")
    return replace(est, values=values / mass, corrected=True)


def ise(est: DensityEstimate, true_density) -> float:
    """Trapezoid ISE over ``est.grid_x``; mass outside the grid is ignored.

    See :func:`outside_l2_mass` for the size of what the grid leaves out.
    """
    p = np.asarray(true_density(est.grid_x), dtype=float)
    return float(integrate.trapezoid((p - est.values) ** 2, est.grid_x))


def outside_l2_mass(true_density, lo: float, hi: float) -> float:
    """``int_{x<lo or x>hi} p(x)^2 dx``: the ISE floor lost to grid truncation."""
    sq = lambda x: float(true_density(np.asarray(x))) ** 2  # noqa: E731
    left, _ = integrate.quad(sq, -np.inf, lo, epsabs=1e-14, epsrel=1e-10)
    right, _ = integrate.quad(sq, hi, np.inf, epsabs=1e-14, epsrel=1e-10)
    return left + right
