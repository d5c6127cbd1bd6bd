import json
import os

import numpy as np
import pytest

import hydride as hy
from hydride import cli
from hydride.config import (DEFAULT_CONFIG, emit_config, initial_fields,
                            parse_config)
from hydride.errors import AdmissibilityError, ParseError

MINIMAL = """
[grid]
cells = 8

[time]
t_final = 0.25
n_steps = 4
"""

EQUILIBRIUM_PROBE = """
[grid]
cells = 1

[time]
t_final = 0.2
n_steps = 4

[initial_data]
theta0 = constant value=1.2
chi0 = constant value=0.0
p0 = constant value=148.4
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    p = cfg.run.params
    # normalized constants are all 1 (nu is the analyzed regime, 0)
    assert (p.a, p.b, p.c_p, p.lambda_diff, p.k0, p.delta, p.mu,
            p.gamma) == (1.0,) * 8
    assert p.nu == 0.0
    assert cfg.run.graph.lambda_beta == 1.0
    assert cfg.run.certificate.c_s > 0.0
    assert cfg.run.grid.cells == (8,)


def test_default_config_text_parses():
    cfg = parse_config(DEFAULT_CONFIG)
    assert cfg.run.n_steps == 16


def test_unknown_key_is_hard_error():
    with pytest.raises(ParseError, match="foo"):
        parse_config(MINIMAL + "\n[model]\nfoo = 1\n")
    with pytest.raises(ParseError, match="mystery"):
        parse_config(MINIMAL + "\n[mystery]\nx = 1\n")


def test_bad_value_names_key():
    with pytest.raises(ParseError, match="n_steps"):
        parse_config("[time]\nn_steps = soon\n")


def test_admissibility_gate_at_parse_time():
    with pytest.raises(AdmissibilityError, match="c_h_prime"):
        parse_config(MINIMAL + "\n[model]\nc1 = 1.0\n")
    with pytest.raises(AdmissibilityError):
        parse_config(MINIMAL + "\n[model]\nlambda_beta = 2.0\n")


def test_config_round_trip():
    for text in (MINIMAL, EQUILIBRIUM_PROBE, DEFAULT_CONFIG):
        cfg = parse_config(text)
        again = parse_config(emit_config(cfg))
        assert again == cfg


def test_initial_fields_profiles():
    cfg = parse_config(MINIMAL + """
[initial_data]
theta0 = trig base=1.0 amplitude=0.2 mode=1
chi0 = gaussian-bump base=0.2 amplitude=0.3 center=0.5 width=0.1
p0 = step left=1.0 right=2.0 position=0.5
""")
    theta0, chi0, p0 = initial_fields(cfg)
    g = cfg.run.grid
    x = g.axis_centers(0)
    assert theta0 == pytest.approx(1.0 + 0.2 * np.cos(np.pi * x))
    assert chi0.max() <= 0.5 and chi0.min() >= 0.2
    assert set(np.unique(p0)) == {1.0, 2.0}


# --- CLI ----------------------------------------------------------------------

def write_cfg(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return str(path)


def test_cmd_run_success_and_artifacts(tmp_path):
    cfgpath = write_cfg(tmp_path, EQUILIBRIUM_PROBE)
    out = str(tmp_path / "out")
    assert cli.main(["run", cfgpath, "--out", out]) == 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["certificate"]["c_s"] > 0
    assert (tmp_path / "out" / "ledger.csv").exists()
    assert (tmp_path / "out" / "snapshot_theta_00000.txt").exists()
    # the probe keeps the phase clamped: ledger shows zero phase motion
    rows = (tmp_path / "out" / "ledger.csv").read_text().strip().splitlines()
    k = rows[0].split(",").index("kinetic_chi")
    assert all(float(r.split(",")[k]) == 0.0 for r in rows[1:])


def test_cmd_run_pressure_floor_noted(tmp_path):
    cfgpath = write_cfg(tmp_path, EQUILIBRIUM_PROBE.replace(
        "p0 = constant value=148.4", "p0 = constant value=0.0"))
    out = str(tmp_path / "out0")
    assert cli.main(["run", cfgpath, "--out", out]) == 0
    manifest = json.loads((tmp_path / "out0" / "manifest.json").read_text())
    assert manifest["pressure_floor"]["applied"] is True
    assert manifest["pressure_floor"]["cells"] == 1


def test_cmd_run_config_error_exit_1(tmp_path):
    cfgpath = write_cfg(tmp_path, MINIMAL + "\n[model]\nc1 = 1.0\n")
    out = str(tmp_path / "gate")
    assert cli.main(["run", cfgpath, "--out", out]) == 1
    manifest = json.loads((tmp_path / "gate" / "manifest.json").read_text())
    assert manifest["status"] == "error"
    assert manifest["error"]["type"] == "AdmissibilityError"
    # no partial artifacts besides the manifest
    assert os.listdir(tmp_path / "gate") == ["manifest.json"]


def test_cmd_run_invariant_violation_exit_2(tmp_path, monkeypatch):
    # detector path: replay a hand-corrupted state through the stepper
    import hydride.stepper as stepper

    real_step = stepper.step

    def corrupting_step(prev, cfg, ops=None, forcings=None):
        new, stats = real_step(prev, cfg, ops, forcings)
        new.p = new.p - 1e4  # hand-edited negative pressure
        stepper._check_state(new, cfg)
        return new, stats

    monkeypatch.setattr("hydride.stepper.step", corrupting_step)
    cfgpath = write_cfg(tmp_path, EQUILIBRIUM_PROBE)
    out = str(tmp_path / "corrupt")
    assert cli.main(["run", cfgpath, "--out", out]) == 2
    manifest = json.loads((tmp_path / "corrupt" / "manifest.json").read_text())
    assert manifest["error"]["type"] == "PositivityViolation"
    assert os.listdir(tmp_path / "corrupt") == ["manifest.json"]


def test_cmd_run_solver_failure_exit_3(tmp_path):
    cfgpath = write_cfg(tmp_path, MINIMAL + """
[initial_data]
theta0 = trig base=1.0 amplitude=0.2 mode=1

[solvers]
cg_max_iter = 1
""")
    out = str(tmp_path / "stall")
    assert cli.main(["run", cfgpath, "--out", out]) == 3
    manifest = json.loads((tmp_path / "stall" / "manifest.json").read_text())
    assert manifest["error"]["type"] == "MaxIterations"


def test_cmd_refine(tmp_path):
    cfgpath = write_cfg(tmp_path, EQUILIBRIUM_PROBE)
    out = str(tmp_path / "ref")
    assert cli.main(["refine", cfgpath, "--n", "4,8,16", "--out", out]) == 0
    manifest = json.loads((tmp_path / "ref" / "manifest.json").read_text())
    assert manifest["uniformity_ok"] is True
    assert (tmp_path / "ref" / "cauchy.csv").exists()
    for n in (4, 8, 16):
        assert (tmp_path / "ref" / f"run_N{n}" / "ledger.csv").exists()
    assert cli.main(["refine", cfgpath, "--n", "x,y", "--out", out]) == 1


def test_cmd_mms(tmp_path):
    cfgpath = write_cfg(tmp_path, MINIMAL)
    out = str(tmp_path / "mms")
    assert cli.main(["mms", cfgpath, "--case", "trig1d", "--out", out]) == 0
    manifest = json.loads((tmp_path / "mms" / "manifest.json").read_text())
    assert min(manifest["spatial_orders"]) > 1.9
    assert min(manifest["temporal_orders"]["theta"]) > 0.9
    assert cli.main(["mms", cfgpath, "--case", "bogus",
                     "--out", str(tmp_path / "mbad")]) == 1
