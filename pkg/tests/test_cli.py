import json
import math
import os

import numpy as np
import pytest

from ricci_disk import cli, config, flow, models

HEMI_CFG = """
[model]
name = hemisphere

[schedule]
kind = constant
psi = 0.0

[solver]
n = 64
r_stop = 64
output_every = 1
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run_cli(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# ---------------------------------------------------------------------------
# configuration


def test_parse_defaults_and_types():
    spec, sched, cfg, out = config.parse(HEMI_CFG)
    assert spec == models.SphericalCap(1.0, math.pi / 2)
    assert sched(0.3) == 0.0
    assert cfg.n == 64 and cfg.R_stop == 64.0 and cfg.output_every == 1
    assert out == {"directory": "out", "figures": True}


def test_parse_model_parameters_and_table():
    text = """
[model]
name = cap
K = 2.0
alpha = 1.0
[schedule]
kind = table
t = 0, 0.1, 0.2, 0.3
psi = 0.5, 0.4, 0.3, 0.2
[solver]
t_max = 0.2
couple_f = yes
tau0 = 0.3
[output]
directory = results
figures = off
"""
    spec, sched, cfg, out = config.parse(text)
    assert spec == models.SphericalCap(2.0, 1.0)
    assert sched(0.05) == pytest.approx(0.45)
    assert cfg.couple_f and cfg.tau0 == 0.3
    assert out == {"directory": "results", "figures": False}


def test_every_problem_is_reported():
    text = """
[model]
name = torus
[schedule]
kind = wobble
[solver]
n = lots
speed = 3
[output]
colour = red
[extras]
"""
    with pytest.raises(config.ConfigError) as exc:
        config.parse(text)
    probs = exc.value.problems
    assert len(probs) == 6
    for key in ("[extras]", "[model]", "[schedule]", "n:", "'speed'", "'colour'"):
        assert any(key in p for p in probs), key


def test_missing_model_and_unreadable_file(tmp_path):
    with pytest.raises(config.ConfigError, match="name is required"):
        config.parse("[solver]\nn = 64\n")
    with pytest.raises(config.ConfigError, match="cannot read"):
        config.read_config(tmp_path / "absent.ini")
    with pytest.raises(config.ConfigError, match="unreadable"):
        config.parse("no section header")


def test_config_hash_is_canonical():
    spec, sched, cfg, _ = config.parse(HEMI_CFG)
    a = config.materialize(spec, sched, cfg)
    b = json.loads(json.dumps(a))
    assert config.config_hash(a) == config.config_hash(dict(reversed(list(b.items()))))
    cfg.n = 128
    assert config.config_hash(config.materialize(spec, sched, cfg)) != config.config_hash(a)


# ---------------------------------------------------------------------------
# commands


@pytest.fixture(scope="module")
def hemi_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("hemi")
    cfg = d / "run.ini"
    cfg.write_text(HEMI_CFG)
    out = d / "out"
    code = cli.main(["run", "--config", str(cfg), "--out", str(out)])
    return code, out, cfg


def test_run_writes_artifacts(hemi_run):
    code, out, _ = hemi_run
    assert code == cli.EXIT_OK
    for name in ("series.csv", "series.png", "checkpoint.json", "manifest.json", "checkpoint.json.level00.json"):
        assert (out / name).exists(), name
    man = json.loads((out / "manifest.json").read_text())
    assert man["stop_reason"] == "curvature_stop"
    assert man["files"]["series.csv"] == cli._sha256(out / "series.csv")
    spec, sched, cfg, _ = config.parse(HEMI_CFG)
    assert man["config_hash"] == config.config_hash(config.materialize(spec, sched, cfg))
    series = flow.TimeSeries.from_csv(out / "series.csv")
    assert series.column("r_max")[-1] >= 64


def test_run_is_reproducible(tmp_path, hemi_run):
    _, out, cfg = hemi_run
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "series.csv").read_bytes() == (out / "series.csv").read_bytes()


def test_blowup_from_run_directory(capsys, hemi_run):
    _, out, _ = hemi_run
    code, stdout, _ = run_cli(capsys, "blowup", "--out", out)
    assert code == 0
    report = json.loads((out / "blowup.json").read_text())
    assert len(report["levels"]) >= 3
    assert all(lv["classification"] == "hemisphere" for lv in report["levels"])
    data = np.loadtxt(out / "level_00.csv", delimiter=",", skiprows=1)
    assert data.shape[1] == 3
    assert (out / "blowup.png").exists()


def test_normalize_from_run_directory(capsys, hemi_run):
    _, out, _ = hemi_run
    code, stdout, _ = run_cli(capsys, "normalize", "--out", out)
    assert code == 0
    report = json.loads(stdout)
    assert report["T_est"] == pytest.approx(0.5, abs=5e-3)
    assert report["final_spread"] < 1e-2
    assert (out / "normalized.csv").read_text().startswith("t_tilde,r_max,r_min,h\n")


def test_collapse_on_checkpoint(capsys, tmp_path, hemi_run):
    _, out, _ = hemi_run
    code, stdout, _ = run_cli(capsys, "collapse", "--checkpoint", out / "checkpoint.json.level00.json",
                              "--r", "0.2,0.4", "--out", tmp_path)
    assert code == 0
    report = json.loads(stdout)
    assert [row["r"] for row in report["radii"]] == [0.2, 0.4]
    assert "loglog_slope" in report
    assert (tmp_path / "kappa.png").exists()
    code, _, err = run_cli(capsys, "collapse", "--checkpoint", out / "checkpoint.json", "--r", "0,1")
    assert code == cli.EXIT_CONFIG and "positive" in err


def test_entropy_on_checkpoint(capsys, hemi_run):
    _, out, _ = hemi_run
    ck = out / "checkpoint.json.level00.json"
    code, stdout, _ = run_cli(capsys, "entropy", "--checkpoint", ck, "--tau", 0.5)
    assert code == 0
    report = json.loads(stdout)
    assert report["total"] == pytest.approx(-1.0, abs=1e-2)
    assert report["normalization"] == pytest.approx(1.0, abs=1e-12)
    code, _, err = run_cli(capsys, "entropy", "--checkpoint", ck)
    assert code == cli.EXIT_CONFIG and "--tau" in err


def test_mu_probes_are_seeded(capsys, tmp_path, hemi_run):
    _, out, _ = hemi_run
    ck = out / "checkpoint.json.level00.json"
    runs = []
    for sub in ("a", "b"):
        code, stdout, _ = run_cli(capsys, "mu", "--checkpoint", ck, "--tau", 0.5, "--r", "0.3,0.6",
                                  "--seed", 7, "--out", tmp_path / sub)
        assert code == 0
        runs.append(json.loads(stdout))
    assert runs[0] == runs[1]
    assert runs[0]["converged"]
    for p in runs[0]["cutoff_probes"]:
        assert p["mu"] <= p["bound"] + 1e-9
    assert (tmp_path / "a" / "phi.csv").read_text().startswith("s,phi\n")


def test_models_list(capsys):
    code, stdout, _ = run_cli(capsys, "models", "list")
    assert code == 0
    names = [json.loads(line)["model"] for line in stdout.splitlines()]
    assert names == list(models.MODEL_TYPES)


def test_compare_against_exact_cap(capsys, tmp_path):
    cfg = write(tmp_path, HEMI_CFG.replace("n = 64", "n = 128").replace("r_stop = 64", "t_max = 0.3"))
    code, stdout, _ = run_cli(capsys, "compare", "--config", cfg, "--out", tmp_path / "o")
    assert code == 0
    assert json.loads(stdout)["max_rel_R_error"] < 1e-2
    bad = write(tmp_path, HEMI_CFG.replace("hemisphere", "flat"), "flat.ini")
    code, _, err = run_cli(capsys, "compare", "--config", bad)
    assert code == cli.EXIT_CONFIG and "spherical cap" in err


def test_config_errors_exit_2(capsys, tmp_path):
    bad = write(tmp_path, "[model]\nname = torus\n")
    code, _, err = run_cli(capsys, "run", "--config", bad, "--out", tmp_path / "o")
    assert code == cli.EXIT_CONFIG and "torus" in err
    code, _, _ = run_cli(capsys, "run")
    assert code == cli.EXIT_CONFIG
    code, _, _ = run_cli(capsys, "no-such-command")
    assert code == 2


def test_solver_error_exit_3(capsys, tmp_path):
    cfg = write(tmp_path, "[model]\nname = hemisphere\n[solver]\nn = 32\nr_stop = inf\n")
    code, _, err = run_cli(capsys, "run", "--config", cfg, "--out", tmp_path / "o")
    assert code == cli.EXIT_SOLVER


def test_sweep(capsys, tmp_path):
    paths = [write(tmp_path, HEMI_CFG.replace("r_stop = 64", f"t_max = {t}"), f"c{i}.ini")
             for i, t in enumerate((0.1, 0.2))]
    code, stdout, _ = run_cli(capsys, "run", "--sweep", *paths, "--out", tmp_path / "sweep")
    assert code == 0
    lines = [json.loads(line) for line in stdout.splitlines()]
    assert [ln["exit"] for ln in lines] == [0, 0]
    for ln in lines:
        assert os.path.exists(os.path.join(ln["output"], "manifest.json"))
