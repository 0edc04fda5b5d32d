"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``. The Monte Carlo
criteria take a few minutes in total on one core.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from cdeconv.bench import GridSpec, rate_study, run_experiment
from cdeconv.cli import main, parse_config
from cdeconv.distributions import Cauchy, MixtureSpec, TwoPoint, exact_g
from cdeconv.estimator import EstimatorConfig, density_estimate, fourier_invert, product_cf
from cdeconv.theory import lemma1_sweep, lemma2_sweep, lemma3_exceedance, theorem1_check

HALF = MixtureSpec.from_gamma(0.5)


@pytest.fixture
def verdict(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail
    return emit


def cauchy_g(t):
    return exact_g(Cauchy(), HALF, t)


def truncated_cauchy(x, T):
    return (1 + math.exp(-T) * (x * np.sin(T * x) - np.cos(T * x))) / (math.pi * (1 + x * x))


def test_telescoping_oracle(verdict):
    t = np.linspace(-10, 10, 100)
    start = time.perf_counter()
    got = product_cf(cauchy_g, t, 10, 0.5)
    elapsed = time.perf_counter() - start
    err = np.abs(got - np.exp(-(1 - 2.0**-22) * np.abs(t))).max()
    verdict("telescoping", err <= 1e-10 and elapsed < 1.0,
            f"max error {err:.2e}, {elapsed * 1e3:.1f} ms")


def test_inversion_oracle(verdict):
    x = np.linspace(-5, 5, 401)
    # at depth 30 the product of exact g is f(t) up to a factor exp(2^-62 |t|)
    est = density_estimate(cauchy_g, x, EstimatorConfig(N=30, cutoff=5.0, eps_floor=0.0),
                           gamma=0.5, n=1000)
    err = np.abs(est.values - truncated_cauchy(x, 5.0)).max()

    probe = np.array([0.0, 0.7, 2.0])
    exact = truncated_cauchy(probe, 5.0)
    errs = [np.abs(fourier_invert(np.exp(-np.linspace(0, 5, m + 1)), 5.0, probe) - exact).max()
            for m in (16, 32)]
    ratio = errs[0] / errs[1]
    verdict("inversion", err <= 1e-6 and 13 <= ratio <= 19,
            f"max error {err:.2e} at T=5, Simpson halving ratio {ratio:.1f}")


def test_plancherel_tail(verdict):
    cfg = parse_config(["bench", "--oracle", "--n", "1000", "--reps", "3",
                        "--cutoff", "2", "--N", "30"])
    report = run_experiment(cfg.plan())
    s = report.summary(1000)
    full = math.exp(-4) / (2 * math.pi)

    # independent closed form of p - p_hat outside the [-25, 25] grid
    def err2(v):
        return (math.exp(-2) * (math.cos(2 * v) - v * math.sin(2 * v))
                / (math.pi * (1 + v * v))) ** 2
    tail = 2 * integrate.quad(err2, 25, 1e4, limit=5000)[0]
    gap = abs(s.mise - (full - tail))
    constant = len({r.ise for r in report.reps}) == 1
    verdict("plancherel", gap <= 1e-5 and constant,
            f"MISE {s.mise:.7f} vs {full:.7f} - tail {tail:.2e}, gap {gap:.1e}")


@pytest.mark.slow
def test_fig1_reproduction(verdict):
    cfg = parse_config(["fig1", "--n", "1000,8000"])
    plan = cfg.plan(grid=GridSpec())
    start = time.perf_counter()
    report = run_experiment(plan)
    elapsed = time.perf_counter() - start
    m1, m8 = report.summary(1000).median_ise, report.summary(8000).median_ise
    verdict("fig1", m1 <= 0.02 and m8 < m1 and elapsed < 120,
            f"median ISE n=1000 {m1:.4f}, n=8000 {m8:.4f}, {elapsed:.0f} s")


@pytest.mark.slow
def test_rate_discrimination(verdict):
    report = run_experiment(parse_config(["rate"]).plan())
    fit = rate_study(report)
    verdict("rate", fit.slope < 0 and fit.power_law_preferred,
            f"slope {fit.slope:.3f} +- {fit.slope_halfwidth:.3f}, "
            f"rss power {fit.residual:.2e} vs log {fit.log_residual:.2e}")


def test_lemma1_sweep(verdict):
    start = time.perf_counter()
    rows = lemma1_sweep()
    elapsed = time.perf_counter() - start
    worst = min(r.slack for r in rows)
    bad = sum(r.slack < -1e-12 for r in rows)
    verdict("lemma1", bad == 0 and elapsed < 5,
            f"{len(rows)} points, min slack {worst:.2e}, {elapsed:.2f} s")


def test_lemma2_sweep(verdict):
    rows = lemma2_sweep()
    bad = sum(r.slack < 0 for r in rows)
    verdict("lemma2", bad == 0 and {r.family for r in rows} == {"gaussian", "twopoint"},
            f"{len(rows)} points, min slack {min(r.slack for r in rows):.2e}")


@pytest.mark.slow
def test_lemma3_exceedance(verdict):
    res = lemma3_exceedance(TwoPoint(), 10_000, 2.0, 0.5, 2.0, reps=2000, seed=2003)
    ok = res.bound.bound >= 1 or res.frequency <= res.bound.bound
    verdict("lemma3", ok and "nu_r/n" in res.bound.omitted_terms,
            f"frequency {res.frequency:g} vs bound {res.bound.bound:.2e} "
            f"(max sup {res.sup_values.max():.3f}, nu_r/n omitted)")


@pytest.mark.slow
def test_theorem1_variance(verdict):
    start = time.perf_counter()
    res = theorem1_check(Cauchy(), HALF, 1.0, 10_000, reps=2000, seed=2004)
    elapsed = time.perf_counter() - start
    verdict("theorem1", 0.85 <= res.ratio <= 1.15 and elapsed < 300,
            f"empirical {res.empirical_var:.4f} / series {res.series_var:.4f} "
            f"= {res.ratio:.4f}, {elapsed:.0f} s")


def test_determinism(verdict, tmp_path):
    args = ["bench", "--n", "500,2000", "--reps", "6", "--seed", "77"]
    dirs = []
    for i, threads in enumerate(("1", "1", "2")):
        out = tmp_path / f"run{i}"
        assert main(args + ["--threads", threads, "--out-dir", str(out)]) == 0
        dirs.append(out)
    same = all((d / f).read_bytes() == (dirs[0] / f).read_bytes()
               for d in dirs[1:] for f in ("reps.csv", "mise.csv"))
    verdict("determinism", same, "bench reports byte-identical across reruns and --threads 1/2")
