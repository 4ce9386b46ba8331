import json
import subprocess
import sys

import numpy as np
import pytest

from axisym.cli import model_loglik, run
from axisym.covariance import HarmonicCovariance, load_model, save_model
from axisym.fitting import WlsProblem, loglik_lowrank, wls_fit_linear
from axisym.geom import read_observations
from axisym.kriging import krige_residuals
from axisym.mean import bin_average, fit_mean, load_mean_model, residuals
from axisym.simulate import simulate_observations, synthetic_orbits
from axisym.variogram import PairConfig, cross_orbit_variogram, read_variogram


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    model = HarmonicCovariance.random(3, np.random.default_rng(2), scale=0.2, nugget=0.01)
    save_model(d / "truth.json", model)
    assert run(["simulate", "--model", str(d / "truth.json"), "--seed", "4", "--orbits", "6",
                "--scans", "60", "--baseline-du", "300", "--raw", "--out", str(d / "raw.tsv")]) == 0
    assert run(["ingest", "--in", str(d / "raw.tsv"), "--out", str(d / "obs.tsv")]) == 0
    assert run(["mean-fit", "--obs", str(d / "obs.tsv"), "--out", str(d / "mean.json"),
                "--max-degree", "4", "--max-order", "1"]) == 0
    assert run(["residuals", "--obs", str(d / "obs.tsv"), "--mean", str(d / "mean.json"),
                "--out", str(d / "res.tsv")]) == 0
    assert run(["variogram", "--obs", str(d / "res.tsv"), "--out", str(d / "vg.tsv")]) == 0
    return d, model


def test_simulate_matches_library(work):
    d, model = work
    obs = read_observations(d / "raw.tsv")
    ref = simulate_observations(load_model(d / "truth.json"), synthetic_orbits(6, 60), 4, np.log(300.0))
    np.testing.assert_allclose(obs.value, ref.value, rtol=0, atol=0)


def test_pipeline_matches_library(work, capsys):
    d, _ = work
    obs = read_observations(d / "obs.tsv")
    mean, _ = fit_mean(bin_average(obs), obs, 4, 1)
    np.testing.assert_array_equal(load_mean_model(d / "mean.json").coefficients, mean.coefficients)
    res = residuals(obs, mean)
    np.testing.assert_array_equal(read_observations(d / "res.tsv").value, res.value)
    assert read_variogram(d / "vg.tsv") == cross_orbit_variogram(res, 0, PairConfig())


def test_linear_wls_and_loglik(work, capsys):
    d, _ = work
    out = d / "lin.json"
    assert run(["wls-fit", "--n", "2", "--variogram", str(d / "vg.tsv"), "--linear",
                "--out", str(out), "--report", str(d / "lin.txt")]) == 0
    lin = wls_fit_linear(WlsProblem.build(read_variogram(d / "vg.tsv"), 2))
    rep = dict(line.split("\t", 1) for line in (d / "lin.txt").read_text().splitlines()[:6])
    assert float(rep["linear_criterion"]) == lin.criterion
    model = load_model(out).replace(nugget=max(load_model(out).nugget, 1e-3))
    save_model(d / "lin2.json", model)
    capsys.readouterr()
    assert run(["loglik", "--model", str(d / "lin2.json"), "--obs", str(d / "res.tsv")]) == 0
    printed = float(capsys.readouterr().out.strip())
    assert printed == loglik_lowrank(model, read_observations(d / "res.tsv"))
    assert printed == model_loglik(model, read_observations(d / "res.tsv"))


@pytest.mark.filterwarnings("ignore::axisym.fitting.ConvergenceWarning")
def test_wls_fit_reruns_byte_identical(work):
    d, _ = work
    args = ["wls-fit", "--n", "2", "--variogram", str(d / "vg.tsv"), "--max-iter", "30"]
    assert run(args + ["--out", str(d / "a.json"), "--report", str(d / "a.txt")]) == 0
    assert run(args + ["--out", str(d / "b.json"), "--report", str(d / "b.txt")]) == 0
    assert (d / "a.json").read_bytes() == (d / "b.json").read_bytes()
    assert (d / "a.txt").read_bytes() == (d / "b.txt").read_bytes()
    assert "frozen\tA0[0,0] A0[1,0] A0[2,0]" in (d / "a.txt").read_text()


def test_krige_matches_library(work):
    d, model = work
    (d / "targets.tsv").write_text("lat_deg\tlon_deg\n-60.5\t10\n-58.5\t-40\n")
    assert run(["krige", "--model", str(d / "truth.json"), "--obs", str(d / "res.tsv"),
                "--targets", str(d / "targets.tsv"), "--out", str(d / "k.tsv")]) == 0
    rows = np.loadtxt(d / "k.tsv", skiprows=1)
    kr = krige_residuals(model, read_observations(d / "res.tsv"), ([-60.5, -58.5], [10.0, -40.0]))
    np.testing.assert_array_equal(rows[:, 2], kr.prediction)
    np.testing.assert_array_equal(rows[:, 3], kr.variance)


def test_level25_and_mle(work):
    d, _ = work
    assert run(["level25", "--model", str(d / "truth.json"), "--mean", str(d / "mean.json"),
                "--obs", str(d / "obs.tsv"), "--out", str(d / "l25.tsv"), "--exclude", "0",
                "--threads", "2"]) == 0
    ids = {int(line.split("\t")[0]) for line in (d / "l25.tsv").read_text().splitlines()[1:]}
    assert ids and 0 not in ids
    assert run(["mle", "--kind", "white", "--obs", str(d / "res.tsv"),
                "--report", str(d / "w.txt")]) == 0
    assert (d / "w.txt").read_text().startswith("loglik\t")


def test_usage_errors_exit_1(work, capsys):
    d, _ = work
    with pytest.raises(SystemExit) as e:
        run(["wls-fit", "--bogus"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        run(["wls-fit", "--n", "-1", "--variogram", "x", "--out", "y"])
    assert e.value.code == 1
    assert run(["level25", "--model", str(d / "truth.json"), "--mean", str(d / "mean.json"),
                "--obs", str(d / "obs.tsv"), "--out", str(d / "x.tsv"),
                "--lat-window", "-50", "-60"]) == 1


def test_data_errors_exit_2_with_line_number(work, capsys):
    d, _ = work
    bad = d / "bad.tsv"
    bad.write_text("orbit_id\ttime_s\tlat_deg\tlon_deg\tozone_du\n0\t0\t10\t20\t300\n0\t1\t95\t20\t300\n")
    assert run(["ingest", "--in", str(bad), "--out", str(d / "o.tsv")]) == 2
    assert "line 3" in capsys.readouterr().err
    assert run(["loglik", "--model", str(d / "missing.json"), "--obs", str(d / "res.tsv")]) == 2
    (d / "broken.json").write_text(json.dumps({"kind": "nonsense"}))
    assert run(["loglik", "--model", str(d / "broken.json"), "--obs", str(d / "res.tsv")]) == 2


def test_verify_and_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "axisym", "verify"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.strip().splitlines()
    assert lines[0].startswith("check") and all(line.endswith("pass") for line in lines[1:])
