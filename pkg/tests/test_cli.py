import math
import subprocess
import sys

import numpy as np
import pytest
from scipy import integrate

from cdeconv.cli import (
    EXIT_OK,
    EXIT_PIPELINE,
    EXIT_USAGE,
    UsageError,
    main,
    parse_config,
    read_config_file,
)


def read_csv(path):
    """(preamble dict, header list, float rows) of a cdeconv output file."""
    pre, rows, header = {}, [], None
    for line in open(path).read().splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition("=")
            pre[k] = v
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return pre, header, rows


# parsing ------------------------------------------------------------------

def test_defaults_resolved():
    cfg = parse_config(["fig1"])
    assert cfg.N == 10 and cfg.reps == 50 and cfg.seed == 2003
    assert cfg.gamma == 0.5 and cfg.alpha == 0.5 and cfg.beta == 1.0
    assert cfg.a_exp == 1.0
    assert (cfg.grid_min, cfg.grid_max, cfg.grid_points) == (-5.0, 5.0, 401)
    bench = parse_config(["bench"])
    assert bench.n == (500, 2000, 8000)
    assert bench.grid_points == 2001


def test_gaussian_default_exponent():
    assert parse_config(["bench", "--dist", "gaussian"]).a_exp == 2.0


def test_alpha_beta_define_gamma():
    cfg = parse_config(["estimate", "--alpha", "1", "--beta", "4"])
    assert cfg.gamma == 0.25


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("command=bench\nreps=7\nseed=5\n# a note\n# N=3\n")
    cfg = parse_config(["bench", "--config", str(path), "--seed", "9"])
    assert cfg.reps == 7 and cfg.seed == 9 and cfg.N == 3


def test_file_supplies_command(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# command=rate\n")
    assert parse_config(["--config", str(path)]).command == "rate"
    with pytest.raises(UsageError, match="not 'bench'"):
        parse_config(["bench", "--config", str(path)])


def test_config_reader_stops_at_csv(tmp_path):
    path = tmp_path / "out.csv"
    path.write_text("# seed=4\n# unrelated comment: x=y\nx,p_hat\n1,2\n")
    assert read_config_file(path) == {"seed": "4"}


@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["bench", "--gamma", "1.5"],
    ["bench", "--gamma", "abc"],
    ["bench", "--n", "2000,500"],
    ["bench", "--reps", "0"],
    ["bench", "--dist", "twopoint"],
    ["rate", "--n", "100,200"],
    ["theory-check", "--r-values", "0.5,3"],
    ["estimate", "--oracle"],
    ["bench", "--alpha", "2", "--beta", "1"],
    ["bench", "--panels", "7"],
    ["bench", "--bogus", "1"],
])
def test_usage_errors(argv):
    with pytest.raises(UsageError):
        parse_config(argv)
    assert main(argv) == EXIT_USAGE


def test_unknown_file_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("colour=blue\n")
    assert main(["bench", "--config", str(path)]) == EXIT_USAGE


def test_help_exits_zero():
    out = subprocess.run([sys.executable, "-m", "cdeconv", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "theory-check" in out.stdout


# commands ------------------------------------------------------------------

@pytest.fixture(scope="module")
def fig1_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig1")
    assert main(["fig1", "--n", "1000", "--reps", "3", "--out-dir", str(out)]) == EXIT_OK
    return out


def test_fig1_density_file(fig1_dir):
    pre, header, rows = read_csv(fig1_dir / "density.csv")
    assert header == ["x", "p_true", "p_hat", "p_hat_corrected"]
    data = np.array(rows, dtype=float)
    assert data.shape == (401, 4)
    assert data[0, 0] == -5 and data[-1, 0] == 5
    assert data[200, 1] == pytest.approx(1 / math.pi, rel=1e-15)
    assert integrate.trapezoid(data[:, 3], data[:, 0]) == pytest.approx(1.0, abs=1e-9)
    assert np.all(data[:, 3] >= 0)
    assert pre["command"] == "fig1" and pre["gamma"] == "0.5" and pre["N"] == "10"
    assert "threads" not in pre and "out_dir" not in pre


def test_fig1_summary_file(fig1_dir):
    pre, header, rows = read_csv(fig1_dir / "fig1_summary.csv")
    assert header == ["n", "reps", "median_ise", "mise", "stderr", "excluded"]
    assert rows[0][0] == "1000" and rows[0][1] == "3"
    assert float(rows[0][2]) < 0.05
    assert "truncation_l2" in pre


def test_rerun_from_preamble_is_identical(fig1_dir, tmp_path):
    src = fig1_dir / "density.csv"
    assert main(["--config", str(src), "--out-dir", str(tmp_path)]) == EXIT_OK
    for name in ("density.csv", "fig1_summary.csv"):
        assert (tmp_path / name).read_bytes() == (fig1_dir / name).read_bytes()


def test_estimate_from_input(tmp_path):
    rng = np.random.default_rng(1)
    z = 0.5 * rng.standard_cauchy(2000) + rng.standard_cauchy(2000)
    src = tmp_path / "z.txt"
    np.savetxt(src, z)
    assert main(["estimate", "--input", str(src), "--N", "8",
                 "--out-dir", str(tmp_path)]) == EXIT_OK
    pre, header, rows = read_csv(tmp_path / "density.csv")
    assert header == ["x", "p_hat"]
    data = np.array(rows, dtype=float)
    assert data.shape == (401, 2)
    assert pre["cutoff.crossed"] in ("true", "false")
    # compare with the exactly truncated density at the selected cutoff
    T = float(pre["cutoff.inv_h"])
    assert abs(data[200, 1] - (1 - math.exp(-T)) / math.pi) < 0.03


def test_estimate_pipeline_error_exit(tmp_path):
    assert main(["estimate", "--A", "1000", "--out-dir", str(tmp_path)]) == EXIT_PIPELINE


def test_bench_outputs(tmp_path):
    assert main(["bench", "--n", "300,600", "--reps", "2", "--out-dir", str(tmp_path)]) == EXIT_OK
    _, header, rows = read_csv(tmp_path / "reps.csv")
    assert header == ["n", "rep", "ise", "inv_h", "crossed", "clamps"]
    assert len(rows) == 4
    pre, header, rows = read_csv(tmp_path / "mise.csv")
    assert header == ["n", "mise", "median_ise", "stderr", "excluded"]
    assert [r[0] for r in rows] == ["300", "600"]
    assert pre["mise_definition"] == "replication mean of ISE"


def test_rate_outputs(tmp_path):
    assert main(["rate", "--n", "300,600,1200", "--reps", "2", "--out-dir", str(tmp_path)]) == 0
    pre, header, rows = read_csv(tmp_path / "rate.csv")
    assert header[:3] == ["model", "regressor", "slope"]
    assert pre["corollary_note"] == "reported only; not asserted"
    assert float(pre["corollary_exponent"]) == pytest.approx(-1 / 3.5)
