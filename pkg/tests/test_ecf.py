import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cdeconv.distributions import Cauchy, MixtureSpec, exact_g, sample_x
from cdeconv.ecf import EmpiricalCF, Sample, ecf_eval, ecf_grid, sup_deviation

finite = st.floats(-1e3, 1e3, allow_nan=False)
samples = arrays(np.float64, st.integers(1, 60), elements=finite)
thetas = st.floats(-20, 20, allow_nan=False)


def naive_ecf(u, t):
    return sum(complex(math.cos(t * v), math.sin(t * v)) for v in u) / len(u)


def test_eval_examples():
    ecf = EmpiricalCF([0.0, 0.0])
    assert ecf(3.7) == 1
    flip = EmpiricalCF([1.0, -1.0])
    assert flip(math.pi / 2) == pytest.approx(0.0, abs=1e-15)
    assert flip(math.pi) == pytest.approx(-1.0, abs=1e-15)


def test_scale_divides_data():
    ecf = EmpiricalCF([2.0, -2.0], scale=2.0)
    assert ecf(math.pi) == pytest.approx(-1.0, abs=1e-15)
    np.testing.assert_array_equal(ecf.values, [1.0, -1.0])


def test_rejects_bad_input():
    for bad in ([], [1.0, np.nan], [[1.0]]):
        with pytest.raises(ValueError):
            EmpiricalCF(bad)
    with pytest.raises(ValueError):
        EmpiricalCF([1.0], scale=0)
    with pytest.raises(ValueError):
        Sample(np.array([np.inf]), MixtureSpec(1, 2))


def test_from_sample_uses_beta():
    s = Sample(np.array([4.0, -2.0]), MixtureSpec(1.0, 2.0))
    ecf = EmpiricalCF.from_sample(s)
    np.testing.assert_array_equal(ecf.values, [2.0, -1.0])
    assert ecf.n == 2


def test_values_are_immutable():
    ecf = EmpiricalCF([1.0, 2.0])
    with pytest.raises(ValueError):
        ecf.values[0] = 5.0


@pytest.mark.parametrize("m", [16, 64, 65, 1000])
def test_uniform_grid_matches_pointwise(m):
    z = sample_x(Cauchy(), 20_000, 4)
    ecf = EmpiricalCF(z, 2.0)
    grid = np.linspace(-3.0, 7.0, m)
    got = ecf_grid(ecf, grid)
    want = np.array([ecf_eval(ecf, t) for t in grid])
    assert np.abs(got - want).max() < 1e-12


def test_nonuniform_grid_matches_pointwise():
    z = sample_x(Cauchy(), 5000, 5)
    ecf = EmpiricalCF(z)
    grid = np.sort(np.random.default_rng(0).uniform(-4, 4, 80))
    got = ecf(grid)
    want = np.array([ecf_eval(ecf, t) for t in grid])
    assert np.abs(got - want).max() < 1e-12


def test_grid_against_naive_sum():
    u = [0.3, -1.7, 12.5, 4.0, 1e3]
    ecf = EmpiricalCF(u)
    grid = np.linspace(0, 5, 40)
    want = np.array([naive_ecf(u, t) for t in grid])
    assert np.abs(ecf(grid) - want).max() < 1e-12


def test_grid_is_exactly_one_at_zero():
    ecf = EmpiricalCF(sample_x(Cauchy(), 3000, 1))
    grid = np.linspace(-2, 2, 401)
    assert ecf(grid)[200] == 1


@settings(max_examples=60, deadline=None)
@given(samples, thetas)
def test_bounded_and_unit_at_zero(u, t):
    ecf = EmpiricalCF(u)
    assert abs(ecf(t)) <= 1 + 1e-12
    assert ecf(0.0) == 1


@settings(max_examples=60, deadline=None)
@given(samples, thetas)
def test_hermitian(u, t):
    ecf = EmpiricalCF(u)
    assert ecf(-t) == pytest.approx(ecf(t).conjugate(), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(samples, thetas, st.randoms(use_true_random=False))
def test_permutation_invariant(u, t, rnd):
    perm = list(u)
    rnd.shuffle(perm)
    assert EmpiricalCF(perm)(t) == pytest.approx(EmpiricalCF(u)(t), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(samples, samples, thetas)
def test_concatenation_is_weighted_mean(u1, u2, t):
    n1, n2 = u1.size, u2.size
    joint = EmpiricalCF(np.concatenate([u1, u2]))(t)
    mixed = (n1 * EmpiricalCF(u1)(t) + n2 * EmpiricalCF(u2)(t)) / (n1 + n2)
    assert joint == pytest.approx(mixed, abs=1e-12)


def test_modulus_of_continuity_bounds_increments():
    ecf = EmpiricalCF(sample_x(Cauchy(), 2000, 8))
    delta = 0.01
    t = np.linspace(0, 5, 500)
    inc = np.abs(ecf(t + delta) - ecf(t)).max()
    assert inc <= ecf.modulus_of_continuity(delta) + 1e-14


def test_sup_deviation_examples():
    mix = MixtureSpec.from_gamma(0.5)
    g = lambda t: exact_g(Cauchy(), mix, t)  # noqa: E731
    assert sup_deviation(g, g, 10.0, 0.01) == 0
    ones = EmpiricalCF(np.zeros(5))
    # |1 - e^{-1.5 theta}| is maximised at theta = 1
    assert sup_deviation(ones, g, 1.0, 0.01) == pytest.approx(1 - math.exp(-1.5), abs=1e-12)
    assert sup_deviation(ones, g, 1.0, 0.01) == pytest.approx(0.77687, abs=1e-5)


def test_sup_deviation_shrinks_with_n():
    mix = MixtureSpec.from_gamma(0.5)
    g = lambda t: exact_g(Cauchy(), mix, t)  # noqa: E731
    devs = []
    for n in (500, 50_000):
        rng = np.random.default_rng(n)
        z = mix.alpha * rng.standard_cauchy(n) + mix.beta * rng.standard_cauchy(n)
        devs.append(sup_deviation(EmpiricalCF(z, mix.beta), g, 2.0, 0.01))
    assert devs[1] < devs[0]
    assert devs[1] < 5 * math.sqrt(math.log(50_000) / 50_000)
