"""Empirical characteristic function of the rescaled sample Z/beta.

All evaluation is exact summation over the data. Uniform grids take a
factorized route: writing the grid index as ``j = p + P*q`` gives

    exp(i (t0 + j s) u) = exp(i (t0 + p s) u) * exp(i P q s u),

so the sum over observations becomes a complex matrix product between two
thin tables of size ``P x n`` and ``Q x n``, with ``P*Q >= m``. The tables
are filled by complex-power recurrence from three ``exp(i . u)`` rows, so
the cost is a handful of trigonometric calls per observation instead of
``m``, and the result agrees with the direct sum to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import MixtureSpec

__all__ = ["Sample", "EmpiricalCF", "ecf_eval", "ecf_grid", "sup_deviation"]

_CHUNK = 8192
_MIN_FACTORIZED = 16


@dataclass(frozen=True)
class Sample:
    z: np.ndarray
    mix: MixtureSpec

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 1 or z.size < 1:
            raise ValueError("sample must be a non-empty 1-D array")
        if not np.all(np.isfinite(z)):
            raise ValueError("sample contains non-finite values")
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.size


def _pairwise_total(parts):
    # fixed-order pairwise reduction of chunk partial sums
    parts = list(parts)
    while len(parts) > 1:
        paired = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            paired.append(parts[-1])
        parts = paired
    return parts[0]


def _cis(phase):
    out = np.empty(phase.shape, dtype=complex)
    out.real = np.cos(phase)
    out.imag = np.sin(phase)
    return out


class EmpiricalCF:
    """``g_n(t) = mean(exp(i t u_k))`` with ``u = data / scale``.

    Immutable after construction. Call it with a scalar for a complex
    number or with an array for an elementwise complex array.
    """

    def __init__(self, data, scale=1.0, mix=None):
        data = np.asarray(data, dtype=float)
        if data.ndim != 1 or data.size < 1:
            raise ValueError("data must be a non-empty 1-D array")
        if not np.all(np.isfinite(data)):
            raise ValueError("data contains non-finite values")
        if not scale > 0:
            raise ValueError("scale must be positive")
        u = data / scale
        u.setflags(write=False)
        self._u = u
        self.scale = float(scale)
        self.mix = mix

    @classmethod
    def from_sample(cls, sample: Sample):
        return cls(sample.z, scale=sample.mix.beta, mix=sample.mix)

    @property
    def n(self) -> int:
        return self._u.size

    @property
    def values(self) -> np.ndarray:
        """The rescaled observations ``z / beta``."""
        return self._u

    def __call__(self, t):
        if np.ndim(t) == 0:
            return ecf_eval(self, float(t))
        return ecf_grid(self, np.asarray(t, dtype=float))

    def modulus_of_continuity(self, delta: float) -> float:
        """Bound on ``sup_t |g_n(t + delta) - g_n(t)|``.

        Uses ``|1 - exp(ix)| <= min(2, |x|)`` termwise.
        """
        return float(np.mean(np.minimum(2.0, delta * np.abs(self._u))))


def ecf_eval(ecf: EmpiricalCF, t: float) -> complex:
    u = ecf.values
    # numpy reduces contiguous arrays pairwise
    return complex(np.cos(t * u).mean(), np.sin(t * u).mean())


def _uniform_step(grid):
    m = grid.size
    if m < _MIN_FACTORIZED:
        return None
    step = (grid[-1] - grid[0]) / (m - 1)
    if step <= 0:
        return None
    ideal = grid[0] + step * np.arange(m)
    tol = 1e-13 * max(1.0, np.abs(grid).max())
    if np.abs(grid - ideal).max() > tol:
        return None
    return step


def _powers(base, first, count):
    # rows first * base**k, k < count; drift stays near count * eps
    out = np.empty((count, base.size), dtype=complex)
    out[0] = first
    for k in range(1, count):
        np.multiply(out[k - 1], base, out=out[k])
    return out


def _factorized(u, t0, step, m):
    P = int(np.ceil(np.sqrt(m)))
    Q = -(-m // P)
    partial = []
    for lo in range(0, u.size, _CHUNK):
        uc = u[lo:lo + _CHUNK]
        a = _powers(_cis(step * uc), _cis(t0 * uc), P)
        b = _powers(_cis((step * P) * uc), 1.0, Q)
        partial.append(a @ b.T)
    total = _pairwise_total(partial)
    return total.T.reshape(-1)[:m] / u.size


def _direct(u, grid):
    out = np.empty(grid.size, dtype=complex)
    rows = max(1, (1 << 20) // u.size)
    for lo in range(0, grid.size, rows):
        phase = np.multiply.outer(grid[lo:lo + rows], u)
        out.real[lo:lo + rows] = np.cos(phase).mean(axis=1)
        out.imag[lo:lo + rows] = np.sin(phase).mean(axis=1)
    return out


def ecf_grid(ecf: EmpiricalCF, grid) -> np.ndarray:
    """Evaluate the ECF on a sorted grid; elementwise equal to :func:`ecf_eval`."""
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        return np.empty(0, dtype=complex)
    step = _uniform_step(grid)
    if step is None:
        out = _direct(ecf.values, grid)
    else:
        out = _factorized(ecf.values, grid[0], step, grid.size)
    out[grid == 0] = 1.0
    return out


def sup_deviation(ecf, exact, a: float, step: float) -> float:
    """Grid approximation of ``sup_{|theta| <= a} |g_n(theta) - g(theta)|``.

    The grid is ``{0, +-step, ..., +-a}``; both functions are Hermitian, so
    only the non-negative half is evaluated.
    """
    if not (a > 0 and step > 0):
        raise ValueError("a and step must be positive")
    k = int(np.floor(a / step * (1 + 1e-12)))
    theta = step * np.arange(k + 1)
    if ecf is exact:
        return 0.0
    diff = np.asarray(ecf(theta)) - np.asarray(exact(theta))
    return float(np.abs(diff).max())
