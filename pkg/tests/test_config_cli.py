import json
import subprocess
import sys

import pytest

from thermoduct.cli import main
from thermoduct.config import ConfigError, emit_config, normalize, parse_config

MINIMAL = """\
[geometry]
Lx = 1.0
Ly = 1.0
Lz = 2.0
nx = 2
ny = 2
nz = 4

[material]
nu = 1.0
rho0 = 1.0
c_v = 1.0
lambda = 1.0
alpha1 = 0.1
"""

FULL = MINIMAL + """
[body_force]
field = constant
gz = -0.4

[temperature_bc]
field = span_y
theta0 = 1.0
delta = 0.5

[solver]
outer_tol = 1e-10

[run]
seed = 3
out_dir = out
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg["body_force"]["field"] == "zero"
    assert cfg["solver"]["outer_tol"] == 1e-10
    assert cfg["solver"]["quad_order"] == 5
    assert cfg["run"]["seed"] == 0


def test_range_error_names_line():
    bad = MINIMAL.replace("nu = 1.0", "nu = -1")
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    (line, msg), = err.value.errors
    assert "nu" in msg and "must be" in msg
    assert bad.splitlines()[line - 1] == "nu = -1"


def test_errors_are_collected_not_fail_fast():
    bad = (
        MINIMAL.replace("nu = 1.0", "nu = banana")
        + "\nunknown_key = 1\n\n[made_up]\nx = 2\n"
    )
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    msgs = "\n".join(m for _, m in err.value.errors)
    assert "expected a number" in msgs
    assert "unknown key" in msgs
    assert "unknown section" in msgs
    assert len(err.value.errors) >= 3


def test_missing_required_key_reported():
    with pytest.raises(ConfigError) as err:
        parse_config("[geometry]\nLx = 1.0\n")
    msgs = "\n".join(m for _, m in err.value.errors)
    assert "missing required key geometry.Ly" in msgs
    assert "missing required key material.nu" in msgs


def test_unknown_field_names_rejected():
    bad = FULL.replace("field = span_y", "field = vortex")
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    assert any("not one of" in m for _, m in err.value.errors)


@pytest.mark.parametrize("text", [MINIMAL, FULL])
def test_round_trip_fixpoint(text):
    canonical = normalize(text)
    assert normalize(canonical) == canonical
    cfg1 = parse_config(text)
    cfg2 = parse_config(emit_config(cfg1))
    assert cfg1.sections == cfg2.sections


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_cli_config_error_exit_code(tmp_path):
    p = write_cfg(tmp_path, MINIMAL.replace("nu = 1.0", "nu = -1"))
    assert main(["solve", "--config", str(p)]) == 2
    assert main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_cli_solve_zero_data(tmp_path):
    p = write_cfg(tmp_path, MINIMAL)
    out = tmp_path / "out"
    assert main(["solve", "--config", str(p), "--out", str(out)]) == 0
    assert (out / "trace.csv").exists()
    assert (out / "solution.vtk").exists()
    assert (out / "solution_boundary.vtk").exists()
    report = json.loads((out / "solve_report.json").read_text())
    assert report["outer_iterations"] == 1
    assert report["r_momentum"] < 1e-9


def test_cli_spectrum_artifact(tmp_path):
    p = write_cfg(tmp_path, MINIMAL)
    out = tmp_path / "spec"
    assert main(["spectrum", "--config", str(p), "--out", str(out)]) == 0
    payload = json.loads((out / "spectrum.json").read_text())
    assert payload["z0"] == pytest.approx(1.352317, abs=1e-5)
    assert payload["s0"] == pytest.approx(3.087930, abs=1e-5)
    assert payload["mu_M"] == pytest.approx(1.352317, abs=1e-5)


def test_cli_spectrum_samples_csv(tmp_path):
    text = MINIMAL + "\n[spectrum]\nsamples_csv = true\n"
    p = write_cfg(tmp_path, text)
    out = tmp_path / "spec"
    assert main(["spectrum", "--config", str(p), "--out", str(out)]) == 0
    lines = (out / "mellin_samples.csv").read_text().splitlines()
    assert lines[0] == "z,f"
    assert len(lines) == 2002


def test_cli_solve_diverged_exit_code(tmp_path):
    text = FULL.replace("gz = -0.4", "gz = -1e6")
    p = write_cfg(tmp_path, text)
    assert main(["solve", "--config", str(p), "--out", str(tmp_path / "o")]) == 3


def test_cli_certify_exit_codes(tmp_path):
    # small load: certificates pass
    ok_cfg = write_cfg(tmp_path, FULL, "ok.cfg")
    out_ok = tmp_path / "cert_ok"
    assert main(["certify", "--config", str(ok_cfg), "--out", str(out_ok)]) == 0
    report = json.loads((out_ok / "certificate.json").read_text())
    assert report["smallness_ok"] and report["uniqueness_ok"]
    assert 0 < report["beta"] < 1

    # large load: smallness is ABSENT, exit code flags the failed certificate
    big = FULL.replace("gz = -0.4", "gz = -100.0")
    big_cfg = write_cfg(tmp_path, big, "big.cfg")
    out_big = tmp_path / "cert_big"
    assert main(["certify", "--config", str(big_cfg), "--out", str(out_big)]) == 4
    report = json.loads((out_big / "certificate.json").read_text())
    assert report["beta"] == "ABSENT"
    assert not report["smallness_ok"]


def test_cli_mms_poly_quick(tmp_path):
    text = MINIMAL + "\n[mms]\nstudy = stokes\ncase = poly_quadratic\nlevels = 1\n"
    p = write_cfg(tmp_path, text)
    out = tmp_path / "mms"
    assert main(["mms", "--config", str(p), "--out", str(out)]) == 0
    payload = json.loads((out / "mms_report.json").read_text())
    assert payload["errors"]["u_L2"][0] < 1e-10
    assert (out / "mms_stokes.csv").exists()


def test_cli_runs_as_module(tmp_path):
    p = write_cfg(tmp_path, MINIMAL)
    proc = subprocess.run(
        [sys.executable, "-m", "thermoduct.cli", "spectrum", "--config", str(p),
         "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0


def test_cli_reproducibility_byte_identical(tmp_path):
    p = write_cfg(tmp_path, FULL)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["solve", "--config", str(p), "--out", str(out1), "--seed", "9"]) == 0
    assert main(["solve", "--config", str(p), "--out", str(out2), "--seed", "9"]) == 0
    for name in ("trace.csv", "solve_report.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    assert (out1 / "solution.vtk").read_bytes() == (out2 / "solution.vtk").read_bytes()


def test_cli_internal_error_exit_code(tmp_path, monkeypatch):
    import thermoduct.cli as cli

    def boom(config, out):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(cli, "run_spectrum", boom)
    p = write_cfg(tmp_path, MINIMAL)
    assert cli.main(["spectrum", "--config", str(p), "--out", str(tmp_path / "o")]) == 5
