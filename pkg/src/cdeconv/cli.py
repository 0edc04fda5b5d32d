"""Command-line front end.

    cdeconv fig1 [--out-dir DIR]
    cdeconv bench --n 500,2000,8000 --reps 50 --threads 4
    cdeconv rate --n 1000,4000,16000,64000
    cdeconv theory-check
    cdeconv estimate --input z.txt --gamma 0.5

Settings come from flags, then ``--config FILE`` (flat ``key=value`` lines),
then per-command defaults. Every output file starts with the effective
settings as ``# key=value`` lines; feeding such a file back through
``--config`` reproduces the run. In a config file, ``# key=value`` counts as
a setting when ``key`` is a known setting; any other ``#`` line is a comment,
and parsing stops at the first CSV row.

Exit status: 0 success, 2 usage error, 3 pipeline error, 4 failed check.
"""

from __future__ import annotations

import argparse
import io
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import theory
from .bench import (
    ExperimentPlan,
    GridSpec,
    corollary_exponent,
    rate_study,
    run_experiment,
    run_replication,
)
from .distributions import (
    Cauchy,
    MixtureSpec,
    distribution_from_name,
    make_rng,
    mix_z,
    sample_x,
)
from .ecf import EmpiricalCF
from .errors import DeconvolutionError
from .estimator import EstimatorConfig, correct_density, density_estimate, format_float

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PIPELINE = 3
EXIT_CHECK = 4

COMMANDS = ("estimate", "bench", "rate", "theory-check", "fig1")
DEFAULT_SEED = 2003


class UsageError(Exception):
    pass


def _opt(conv):
    def parse(text):
        return None if text.strip().lower() in ("auto", "none", "") else conv(text)
    return parse


def _int(text):
    value = float(text)
    if value != int(value):
        raise ValueError(text)
    return int(value)


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _int_list(text):
    return tuple(_int(p) for p in text.split(",") if p.strip())


def _float_list(text):
    return tuple(float(p) for p in text.split(",") if p.strip())


# key -> (parser, flag help)
SETTINGS = {
    "dist": (str, "cauchy | gaussian | stable | twopoint"),
    "scale": (float, "distribution scale (Cauchy scale, Gaussian sigma, stable b)"),
    "stable_a": (_opt(float), "stability exponent for --dist stable"),
    "gamma": (_opt(float), "mixing ratio alpha/beta in (0, 1)"),
    "alpha": (_opt(float), "weight of X in Z"),
    "beta": (_opt(float), "weight of Y in Z"),
    "n": (_int_list, "sample size(s), comma separated"),
    "N": (_opt(_int), "product truncation depth; auto = ceil(nu log n)"),
    "A": (float, "eps_n = A sqrt(log n / n)"),
    "zeta": (float, "c_n = (zeta log n)^(1/a)"),
    "nu": (float, "depth schedule constant"),
    "a_exp": (_opt(float), "stability exponent used by c_n; auto from dist"),
    "reps": (_int, "replications"),
    "seed": (_int, "master seed"),
    "threads": (_int, "worker processes"),
    "out_dir": (str, "output directory"),
    "grid_min": (float, "x grid lower end"),
    "grid_max": (float, "x grid upper end"),
    "grid_points": (_int, "x grid size"),
    "panels": (_int, "Simpson panels"),
    "scan_step": (_opt(float), "cutoff scan step; auto = data driven"),
    "eps_floor": (_opt(float), "denominator clamp; auto = eps_n / 2"),
    "cutoff": (_opt(float), "fixed 1/h instead of the scanned cutoff"),
    "oracle": (_bool, "use the exact g instead of data (bench/rate)"),
    "input": (_opt(str), "file of observations z (estimate)"),
    "r_values": (_float_list, "moment orders for the cos-inequality sweep"),
}
NOT_ECHOED = ("threads", "out_dir")

BASE_DEFAULTS = {
    "dist": "cauchy", "scale": 1.0, "stable_a": None, "gamma": None, "alpha": None,
    "beta": None, "n": (1000,), "N": None, "A": 2.0, "zeta": 1.0, "nu": 1.0,
    "a_exp": None, "reps": 1, "seed": DEFAULT_SEED, "threads": 1, "out_dir": ".",
    "grid_min": -5.0, "grid_max": 5.0, "grid_points": 401, "panels": 2048,
    "scan_step": None, "eps_floor": None, "cutoff": None, "oracle": False,
    "input": None, "r_values": (0.25, 0.5, 1.0, 1.5, 2.0),
}
COMMAND_DEFAULTS = {
    "estimate": {},
    "fig1": {"N": 10, "reps": 50},
    "bench": {"n": (500, 2000, 8000), "reps": 50,
              "grid_min": -25.0, "grid_max": 25.0, "grid_points": 2001},
    "rate": {"n": (1000, 4000, 16000, 64000), "reps": 50,
             "grid_min": -25.0, "grid_max": 25.0, "grid_points": 2001},
    "theory-check": {"n": (10000,), "reps": 2000},
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: dict

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    def preamble(self) -> dict:
        out = {"command": self.command}
        out.update({k: v for k, v in self.values.items() if k not in NOT_ECHOED})
        return out

    def preamble_text(self) -> str:
        return "".join(f"# {k}={_show(v)}\n" for k, v in self.preamble().items())

    # derived objects
    def distribution(self):
        return distribution_from_name(self.dist, self.scale, self.stable_a)

    def mixture(self) -> MixtureSpec:
        return _mixture(self.values)

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(
            N=self.N, A=self.A, zeta=self.zeta, nu=self.nu,
            a_exponent=self.a_exp,
            eps_floor=self.eps_floor, panels=self.panels, scan_step=self.scan_step,
            cutoff=self.cutoff)

    def grid(self) -> GridSpec:
        return GridSpec(self.grid_min, self.grid_max, self.grid_points)

    def plan(self, grid=None) -> ExperimentPlan:
        return ExperimentPlan(self.distribution(), self.mixture(), self.n, self.reps,
                              self.estimator_config(), self.seed, grid or self.grid(),
                              self.oracle)


def _default_a(values):
    if values["dist"] == "stable":
        return values["stable_a"] if values["stable_a"] is not None else 1.0
    return {"cauchy": 1.0}.get(values["dist"], 2.0)


def _show(v):
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, tuple):
        return ",".join(_show(x) for x in v)
    return str(v)


def _mixture(values) -> MixtureSpec:
    gamma, alpha, beta = values["gamma"], values["alpha"], values["beta"]
    if alpha is not None:
        beta = 1.0 if beta is None else beta
        mix = MixtureSpec(alpha, beta)
        if gamma is not None and not math.isclose(gamma, mix.gamma, rel_tol=1e-12):
            raise ValueError("gamma disagrees with alpha/beta")
        return mix
    return MixtureSpec.from_gamma(0.5 if gamma is None else gamma,
                                  1.0 if beta is None else beta)


def _normalize_key(key):
    key = key.strip().lstrip("-").replace("-", "_")
    return key


def read_config_file(path) -> dict:
    """Raw ``key -> text`` settings from a flat key=value file."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            commented = line.startswith("#")
            body = line.lstrip("#").strip() if commented else line
            if "=" not in body:
                if commented:
                    continue
                if "," in body:
                    break
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = body.partition("=")
            key = _normalize_key(key)
            if key not in SETTINGS and key != "command":
                if commented:
                    continue
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value.strip()
    return out


def _build_parser():
    p = argparse.ArgumentParser(prog="cdeconv", description=__doc__.split("\n\n")[0],
                                argument_default=argparse.SUPPRESS)
    p.add_argument("command", nargs="?", default=None, help=" | ".join(COMMANDS))
    p.add_argument("--config", help="flat key=value settings file")
    for key, (_, helptext) in SETTINGS.items():
        flag = "--" + key.replace("_", "-")
        if key == "oracle":
            p.add_argument(flag, dest=key, action="store_const", const="true", help=helptext)
        else:
            p.add_argument(flag, dest=key, metavar=key.upper(), help=helptext)
    return p


def parse_config(argv) -> RunConfig:
    """Resolve settings for ``argv``; raises :class:`UsageError` on bad input."""
    parser = _build_parser()
    try:
        ns = vars(parser.parse_args(argv))
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise UsageError("invalid command line") from exc
    file_values = read_config_file(ns.pop("config")) if "config" in ns else {}
    command = ns.pop("command", None)
    file_command = file_values.pop("command", None)
    if command is None:
        command = file_command
    if command is None:
        raise UsageError("no command given; choose one of " + ", ".join(COMMANDS))
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}")
    if file_command is not None and file_command != command:
        raise UsageError(f"config file is for {file_command!r}, not {command!r}")

    values = dict(BASE_DEFAULTS)
    values.update(COMMAND_DEFAULTS[command])
    for source in (file_values, ns):
        for key, text in source.items():
            conv = SETTINGS[key][0]
            try:
                values[key] = conv(text)
            except (TypeError, ValueError):
                raise UsageError(f"--{key.replace('_', '-')}: cannot parse {text!r}") from None
    _validate(command, values)
    mix = _mixture(values)
    values.update(alpha=mix.alpha, beta=mix.beta, gamma=mix.gamma)
    if values["a_exp"] is None:
        values["a_exp"] = _default_a(values)
    return RunConfig(command, values)


def _validate(command, v):
    def need(ok, key, what):
        if not ok:
            raise UsageError(f"--{key.replace('_', '-')}: {what} (got {_show(v[key])})")

    need(v["dist"] in ("cauchy", "gaussian", "normal", "stable", "twopoint"), "dist",
         "unknown distribution")
    need(v["scale"] > 0, "scale", "must be positive")
    need(v["stable_a"] is None or 0 < v["stable_a"] <= 2, "stable_a", "must lie in (0, 2]")
    need(v["gamma"] is None or 0 < v["gamma"] < 1, "gamma", "must lie in (0, 1)")
    need(v["alpha"] is None or v["alpha"] > 0, "alpha", "must be positive")
    need(v["beta"] is None or v["beta"] > 0, "beta", "must be positive")
    try:
        _mixture(v)
    except ValueError as exc:
        raise UsageError(f"--alpha/--beta/--gamma: {exc}") from None
    need(len(v["n"]) >= 1 and all(n >= 2 for n in v["n"]), "n", "sample sizes must be >= 2")
    need(all(b > a for a, b in zip(v["n"], v["n"][1:])), "n", "must be strictly increasing")
    need(v["N"] is None or v["N"] >= 0, "N", "must be non-negative")
    need(v["A"] > 0, "A", "must be positive")
    need(v["zeta"] > 0, "zeta", "must be positive")
    need(v["nu"] > 0, "nu", "must be positive")
    need(v["a_exp"] is None or 0 < v["a_exp"] <= 2, "a_exp", "must lie in (0, 2]")
    need(v["reps"] >= 1, "reps", "must be at least 1")
    need(v["threads"] >= 1, "threads", "must be at least 1")
    need(v["grid_points"] >= 2, "grid_points", "must be at least 2")
    need(v["grid_max"] > v["grid_min"], "grid_max", "must exceed grid-min")
    need(v["panels"] >= 8 and v["panels"] % 2 == 0, "panels", "must be even and >= 8")
    need(v["scan_step"] is None or v["scan_step"] > 0, "scan_step", "must be positive")
    need(v["eps_floor"] is None or v["eps_floor"] >= 0, "eps_floor", "must be >= 0")
    need(v["cutoff"] is None or v["cutoff"] > 0, "cutoff", "must be positive")
    need(all(0 < r <= 2 for r in v["r_values"]), "r_values",
         "moment orders must lie in (0, 2]")
    if command == "rate":
        need(len(v["n"]) >= 3, "n", "rate needs at least 3 sample sizes")
    if command in ("bench", "rate", "fig1"):
        need(v["dist"] in ("cauchy", "gaussian", "normal")
             or (v["dist"] == "stable" and v["stable_a"] in (1.0, 2.0, None)),
             "dist", "ISE needs a closed-form density (cauchy or gaussian)")
    if v["oracle"]:
        need(command in ("bench", "rate"), "oracle", "only bench and rate support it")


# ---------------------------------------------------------------- commands


def _write(cfg: RunConfig, name: str, body: str, extra=None):
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, name)
    with open(path, "w", newline="\n") as fh:
        fh.write(cfg.preamble_text())
        for k, v in (extra or {}).items():
            fh.write(f"# {k}={_show(v)}\n")
        fh.write(body)
    return path


def _load_observations(path):
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=1)
    except ValueError:
        data = np.loadtxt(path, comments="#", ndmin=1)
    return np.asarray(data, dtype=float).ravel()


def cmd_estimate(cfg: RunConfig):
    mix = cfg.mixture()
    config = cfg.estimator_config()
    if cfg.input:
        z = _load_observations(cfg.input)
    else:
        n = cfg.n[0]
        dist = cfg.distribution()
        rng = make_rng(cfg.seed, n, 0)
        z = mix_z(sample_x(dist, n, rng), sample_x(dist, n, rng), mix)
    ecf = EmpiricalCF(z, mix.beta, mix)
    est = density_estimate(ecf, cfg.grid().array(), config)
    return [_write(cfg, "density.csv", est.to_csv())]


def cmd_bench(cfg: RunConfig):
    report = run_experiment(cfg.plan(), threads=cfg.threads)
    notes = report.notes()
    return report, [
        _write(cfg, "reps.csv", report.reps_csv(), notes),
        _write(cfg, "mise.csv", report.aggregate_csv(), notes),
    ]


def cmd_rate(cfg: RunConfig):
    report, paths = cmd_bench(cfg)
    fit = rate_study(report)
    a = cfg.estimator_config().a_exponent
    extra = {
        "corollary_exponent": corollary_exponent(a, cfg.mixture().gamma),
        "corollary_note": "reported only; not asserted",
        "variance_term_note": "bound statement uses 2^N c_n/(n phi^2(c_n)); "
                              "its derivation reaches 4^N c_n/(n d_n^2)",
        "log_rate_benchmark": "ordinary deconvolution typically attains only log(n)^-p",
        "power_law_preferred": fit.power_law_preferred,
    }
    paths.append(_write(cfg, "rate.csv", fit.to_csv(), extra))
    return paths


def cmd_fig1(cfg: RunConfig):
    plan = cfg.plan(grid=GridSpec())
    dist = plan.dist
    shown = cfg.plan()
    res, est = run_replication(shown, plan.n_values[0], 0, keep_estimate=True)
    if est is None:
        raise DeconvolutionError(res.error)
    fixed = correct_density(est)
    x = est.grid_x
    buf = io.StringIO()
    buf.write("x,p_true,p_hat,p_hat_corrected\n")
    for xi, pt, ph, pc in zip(x, dist.density(x), est.values, fixed.values):
        buf.write(",".join(format_float(v) for v in (xi, pt, ph, pc)) + "\n")
    cut = {f"cutoff.{k}": getattr(est.cutoff, k) for k in ("eps_n", "c_n", "inv_h", "crossed")}
    paths = [_write(cfg, "density.csv", buf.getvalue(), cut)]

    report = run_experiment(plan, threads=cfg.threads)
    rows = io.StringIO()
    rows.write("n,reps,median_ise,mise,stderr,excluded\n")
    for s in report.summaries:
        rows.write(f"{s.n},{plan.reps},{format_float(s.median_ise)},{format_float(s.mise)},"
                   f"{format_float(s.stderr)},{s.excluded}\n")
    paths.append(_write(cfg, "fig1_summary.csv", rows.getvalue(), report.notes()))
    return paths


def _rows_csv(rows):
    return "family,r,t,lhs,rhs,slack\n" + "".join(r.as_csv() + "\n" for r in rows)


def cmd_theory_check(cfg: RunConfig):
    checks = []
    l1 = theory.lemma1_sweep()
    checks.append(("lemma1", all(r.slack >= -1e-12 for r in l1),
                   f"min slack {min(r.slack for r in l1):.3e}"))
    l2 = theory.lemma2_sweep()
    checks.append(("lemma2", all(r.slack >= 0 for r in l2),
                   f"min slack {min(r.slack for r in l2):.3e}"))
    cos_rows = theory.cos_inequality_sweep(cfg.r_values)
    checks.append(("cos_inequality", all(r.slack >= 0 for r in cos_rows),
                   f"min slack {min(r.slack for r in cos_rows):.3e}"))

    n = cfg.n[0]
    exc = theory.lemma3_exceedance(theory.TwoPoint(), n, 2.0, 0.5, 2.0, cfg.reps, cfg.seed)
    checks.append(("lemma3", exc.consistent,
                   f"frequency {exc.frequency:g} vs bound {exc.bound.bound:.3e}"))
    mix = cfg.mixture()
    t1 = theory.theorem1_check(Cauchy(1.0), mix, 1.0, n, cfg.reps, cfg.seed + 1)
    checks.append(("theorem1", 0.85 <= t1.ratio <= 1.15, f"variance ratio {t1.ratio:.4f}"))

    b = exc.bound
    lemma3_csv = ("n,a,b,r,beta,theta,bound,frequency,exceedances,reps,omitted\n"
                  f"{b.n},{format_float(b.a)},{format_float(b.b)},{format_float(b.r)},"
                  f"{format_float(b.beta)},{format_float(b.theta)},{format_float(b.bound)},"
                  f"{format_float(exc.frequency)},{exc.exceedances},{exc.reps},"
                  f"{'+'.join(b.omitted_terms)}\n")
    t1_csv = ("t,gamma,n,reps,depth,empirical_var,series_var,ratio\n"
              f"1.0,{format_float(mix.gamma)},{t1.n},{t1.reps},{t1.depth},"
              f"{format_float(t1.empirical_var)},{format_float(t1.series_var)},"
              f"{format_float(t1.ratio)}\n")
    summary = "check,passed,detail\n" + "".join(
        f"{name},{str(ok).lower()},{detail}\n" for name, ok, detail in checks)
    paths = [
        _write(cfg, "lemma1.csv", _rows_csv(l1)),
        _write(cfg, "lemma2.csv", _rows_csv(l2)),
        _write(cfg, "cos_inequality.csv", _rows_csv(cos_rows)),
        _write(cfg, "lemma3.csv", lemma3_csv),
        _write(cfg, "theorem1.csv", t1_csv),
        _write(cfg, "checks.csv", summary),
    ]
    failed = [name for name, ok, _ in checks if not ok]
    return paths, failed


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"cdeconv: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if cfg.command == "estimate":
            paths = cmd_estimate(cfg)
        elif cfg.command == "bench":
            _, paths = cmd_bench(cfg)
        elif cfg.command == "rate":
            paths = cmd_rate(cfg)
        elif cfg.command == "fig1":
            paths = cmd_fig1(cfg)
        else:
            paths, failed = cmd_theory_check(cfg)
            for p in paths:
                print(p)
            if failed:
                print("cdeconv: failed checks: " + ", ".join(failed), file=sys.stderr)
                return EXIT_CHECK
            return EXIT_OK
    except (DeconvolutionError, ValueError, OSError) as exc:
        print(f"cdeconv: {cfg.command} failed: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
