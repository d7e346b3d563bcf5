import json

import numpy as np
import pytest

from colorqubit.cli import main

WIDTHS = ["0.9", "0.95", "1.0", "1.05", "1.1", "1.8", "1.85", "1.9", "1.95", "2.0"]


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text("[grids]\npoints = 64\n")
    return str(p)


def _report(path):
    out = {}
    for line in path.read_text().splitlines():
        key, _, value = line.partition(" = ")
        out[key] = value
    return out


def test_design_writes_reports_and_pinned_config(tmp_path, cfg, capsys):
    out = tmp_path / "run"
    assert main(["--config", cfg, "--out", str(out), "design", "--no-figures"]) == 0
    rep = json.loads((out / "design_report.json").read_text())
    assert 0 < rep["fidelity"] <= 1 and rep["purity"] > 0.99
    manifest = json.loads((out / "design_manifest.json").read_text())
    assert manifest["command"].split()[-2:] == ["design", "--no-figures"]
    assert "design.cfg" in " ".join(manifest["outputs"])
    # the pinned config reproduces the result without solvers
    assert main(["--config", str(out / "design.cfg"), "--out", str(tmp_path / "again"), "design",
                 "--no-figures"]) == 0
    rep2 = json.loads((tmp_path / "again" / "design_report.json").read_text())
    assert rep2["fidelity"] == pytest.approx(rep["fidelity"], rel=1e-9)
    assert "fidelity" in capsys.readouterr().out


def test_design_figure_files(tmp_path, cfg):
    out = tmp_path / "fig"
    assert main(["--config", cfg, "--out", str(out), "design"]) == 0
    for name in ("jsa.dat", "jsa.dat.json", "mf.dat", "jsa_intensity.dat", "mf_signal_mode_1.dat",
                 "objective_surface.dat", "objective_vs_height.dat", "contours.dat"):
        assert (out / name).stat().st_size > 0
    assert main(["--out", str(tmp_path / "s"), "schmidt", "--source", str(out / "jsa.dat")]) == 0
    rep = _report(tmp_path / "s" / "schmidt_report.txt")
    assert float(rep["purity"]) > 0.99


def test_show_config_prints_ini(capsys):
    assert main(["design", "--show-config"]) == 0
    assert "[sfwm]" in capsys.readouterr().out


def test_gate_powers_and_custom_input(tmp_path, cfg):
    out = tmp_path / "g"
    assert main(["--config", cfg, "--out", str(out), "gate", "--powers", "2", "4.15", "--nu", "0.5"]) == 0
    rec = json.loads((out / "gate_report.json").read_text())
    assert rec["theta1_abs"] == pytest.approx(np.pi / 2, rel=1e-9)
    assert rec["nu_rad"] == 0.5
    assert main(["--config", cfg, "--out", str(out), "gate", "--powers", "0", "0"]) == 0
    assert json.loads((out / "gate_report.json").read_text())["beta_abs2"] == 0.0


def test_gate_reads_amplitude_file(tmp_path, cfg):
    assert main(["--config", cfg, "--out", str(tmp_path / "d"), "design"]) == 0
    meta = json.loads((tmp_path / "d" / "mf.dat.json").read_text())
    axis = meta["center_a"] + np.linspace(-meta["half_span_a"], meta["half_span_a"], meta["points_a"])
    amp = tmp_path / "h.dat"
    np.savetxt(amp, np.column_stack([axis, np.exp(-((axis - meta["center_a"]) / 20.0) ** 2), 0 * axis]))
    assert main(["--config", cfg, "--out", str(tmp_path / "g"), "gate", "--input", str(amp)]) == 0
    rec = json.loads((tmp_path / "g" / "gate_report.json").read_text())
    assert 0 <= rec["fidelity"] <= 1
    bad = tmp_path / "bad.dat"
    bad.write_text("1 2\n")
    assert main(["--config", cfg, "--out", str(tmp_path / "g"), "gate", "--input", str(bad)]) == 2


def test_sweep_command(tmp_path, cfg):
    plan = tmp_path / "p.plan"
    plan.write_text("[plan]\nname = tiny\naxis1 = sfwm.Ri values 0.8 0.9\noutputs = fidelity purity\n")
    out = tmp_path / "sw"
    assert main(["--config", cfg, "--out", str(out), "sweep", str(plan)]) == 0
    lines = (out / "tiny.tsv").read_text().splitlines()
    assert lines[0].split("\t") == ["Ri", "fidelity", "purity", "flag"]
    assert len(lines) == 3
    assert (out / "tiny_manifest.json").exists()


def test_dispersion_table_export_and_reuse(tmp_path, cfg):
    out, table = tmp_path / "disp", tmp_path / "neff.dat"
    assert main(["--config", cfg, "--out", str(out), "dispersion", "--wavelengths", "0.5", "2.0", "61",
                 "--export-table", str(table), "--widths", *WIDTHS]) == 0
    data = np.loadtxt(out / "dispersion.dat")
    assert data.shape == (61, 5) and np.all(data[:, 1] > 1.4)
    assert main(["--config", cfg, "--dispersion", str(table), "--out", str(tmp_path / "t"), "schmidt",
                 "--source", "mf"]) == 0
    assert main(["--config", cfg, "--out", str(tmp_path / "e"), "schmidt", "--source", "mf"]) == 0
    k_table = float(_report(tmp_path / "t" / "schmidt_report.txt")["schmidt_number"])
    k_eim = float(_report(tmp_path / "e" / "schmidt_report.txt")["schmidt_number"])
    assert k_table == pytest.approx(k_eim, rel=1e-2)


@pytest.mark.parametrize("text, code", [
    ("[sfwm]\nwidth = 1\n", 2),
    ("[sfwm]\nlambdas_um = 0.3\n[grids]\npoints = 64\n", 2),
    ("[grids]\npoints = 64\n[solver]\ngeometry = config\nrephasematch = false\n[sfwm]\nwidth_um = 0.05\n", 3),
])
def test_exit_codes(tmp_path, text, code, capsys):
    p = tmp_path / "c.cfg"
    p.write_text(text)
    assert main(["--config", str(p), "--out", str(tmp_path), "design", "--no-figures"]) == code
    assert "colorqubit design" in capsys.readouterr().err


def test_plan_errors_exit_two(tmp_path, cfg):
    empty = tmp_path / "e.plan"
    empty.write_text("")
    assert main(["--config", cfg, "--out", str(tmp_path), "sweep", str(empty)]) == 2
    assert main(["--config", cfg, "--out", str(tmp_path), "sweep", str(tmp_path / "missing.plan")]) == 2


def test_stage_named_on_failure(tmp_path, capsys):
    p = tmp_path / "c.cfg"
    p.write_text("[grids]\npoints = 64\n[solver]\ngeometry = config\nrephasematch = false\n[sfwm]\nwidth_um = 0.05\n")
    main(["--config", str(p), "--out", str(tmp_path), "design"])
    assert "stage 'spectra'" in capsys.readouterr().err
