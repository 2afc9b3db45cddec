import json
import subprocess
import sys

import pytest

from couplinglab import cli
from couplinglab.errors import NumericError
from couplinglab.sweeps import SweepTable


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


FLUX_SMALL = {"circuit": "flux", "basis": {"n_p_cutoff": 10, "n_m_cutoff": 10},
              "sweep": {"start_phi0": 0.5, "stop_phi0": 0.51, "n_points": 5}}


def test_spectrum_prints_levels_and_asymmetry(tmp_path, capsys):
    cfg = write(tmp_path, "res.json",
                {"omega_q_GHz": 5, "omega_t_GHz": 5, "g_x_GHz": 0.02, "g_z_GHz": 0.005})
    assert cli.main(["spectrum", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    for name in ("E_1", "E_2", "E_3", "E_4", "w_12", "w_13", "w_14", "A "):
        assert name in out
    a_line = next(line for line in out.splitlines() if line.startswith("A "))
    assert float(a_line.split("=")[1].split()[0]) == pytest.approx(0.02, abs=1e-12)


def test_spectrum_csv_out(tmp_path):
    cfg = write(tmp_path, "res.json", {"omega_q_GHz": 5, "tls": {"epsilon_GHz": 3, "delta_GHz": 4},
                                       "g_z_GHz": 0.01})
    out = tmp_path / "s.csv"
    assert cli.main(["spectrum", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    table = SweepTable.from_csv(out)
    assert table.column("A")[0] == pytest.approx(0.04, abs=1e-12)


def test_missing_config_names_path(tmp_path, capsys):
    missing = tmp_path / "nowhere.json"
    assert cli.main(["sweep-flux", "--config", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["bogus"], ["spectrum", "--config", "x.json", "--weird"],
                                  [], ["spectrum"], ["spectrum", "--config", "x", "--format", "xml"]])
def test_usage_errors_exit_one(argv, capsys):
    assert cli.main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
    assert "sweep-flux" in capsys.readouterr().out


@pytest.mark.parametrize("payload", [
    {"circuit": "flux", "alpha": 0.3},
    {"circuit": "flux", "capacitance_fF": 850},
    {"circuit": "triangle"},
    {"circuit": "flux", "sweep": {"start_phi0": 0.51, "stop_phi0": 0.5}},
    {"circuit": "flux", "ej_over_ec": "forty"},
])
def test_invalid_config_exit_one(tmp_path, payload, capsys):
    cfg = write(tmp_path, "bad.json", payload)
    assert cli.main(["sweep-flux", "--config", str(cfg)]) == 1
    assert "error" in capsys.readouterr().err


def test_malformed_json(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert cli.main(["spectrum", "--config", str(cfg)]) == 1


def test_sweep_flux_writes_csv_and_plots(tmp_path):
    cfg = write(tmp_path, "flux.json", FLUX_SMALL)
    out = tmp_path / "fig34.csv"
    assert cli.main(["sweep-flux", "--config", str(cfg), "--out", str(out), "--plot", "--quiet"]) == 0
    table = SweepTable.from_csv(out)
    assert len(table) == 5 and table.columns[0] == "f"
    assert (tmp_path / "fig34_critical_current.svg").exists()
    assert (tmp_path / "fig34_flux_fluctuator.svg").exists()


def test_sweep_to_stdout_is_deterministic(tmp_path, capsys):
    cfg = write(tmp_path, "flux.json", FLUX_SMALL)
    bodies = []
    for _ in range(2):
        assert cli.main(["sweep-flux", "--config", str(cfg), "--quiet"]) == 0
        bodies.append(SweepTable.from_csv(capsys.readouterr().out).body())
    assert bodies[0] == bodies[1]


def test_circuit_mismatch(tmp_path):
    cfg = write(tmp_path, "flux.json", FLUX_SMALL)
    assert cli.main(["sweep-phase", "--config", str(cfg), "--quiet"]) == 1


def test_sweep_phase_with_plot(tmp_path):
    cfg = write(tmp_path, "phase.json", {"circuit": "phase", "basis": {"n_points": 1024},
                                         "sweep": {"start_phi0": 0.56, "stop_phi0": 0.62,
                                                   "n_points": 3}})
    out = tmp_path / "fig2.csv"
    assert cli.main(["sweep-phase", "--config", str(cfg), "--out", str(out), "--plot"]) == 0
    table = SweepTable.from_csv(out)
    assert list(table.column("ok")) == [1, 1, 0]
    assert (tmp_path / "fig2.svg").exists()


def test_numeric_failure_exit_two(tmp_path, monkeypatch, capsys):
    def boom(cfg):
        raise NumericError("residual too large")

    monkeypatch.setattr(cli, "sweep_flux_qubit", boom)
    cfg = write(tmp_path, "flux.json", FLUX_SMALL)
    assert cli.main(["sweep-flux", "--config", str(cfg)]) == 2
    assert "numeric failure" in capsys.readouterr().err


def test_factors_with_coupling(tmp_path, capsys):
    cfg = write(tmp_path, "fac.json", {
        "circuit": "flux", "frustration_phi0": 0.505, "basis": {"n_p_cutoff": 10, "n_m_cutoff": 10},
        "tls": {"epsilon_GHz": 1, "delta_GHz": 3},
        "coupling": {"model": "flux_fluctuator", "delta_phi_e_phi0": 1e-6}})
    assert cli.main(["factors", "--config", str(cfg), "--quiet"]) == 0
    table = SweepTable.from_csv(capsys.readouterr().out)
    assert "g_x_GHz" in table.columns and table.column("g_z_GHz")[0] != 0


def test_factors_phase_outside_window(tmp_path):
    cfg = write(tmp_path, "fac.json", {"circuit": "phase", "bias_phi0": 0.64,
                                       "basis": {"n_points": 1024}})
    assert cli.main(["factors", "--config", str(cfg), "--quiet"]) == 1


def test_anticross(tmp_path, capsys):
    cfg = write(tmp_path, "ac.json", {
        **FLUX_SMALL, "sweep": {"start_phi0": 0.5, "stop_phi0": 0.51, "n_points": 9},
        "tls": {"epsilon_GHz": 2, "delta_GHz": 4},
        "coupling": {"model": "critical_current", "delta_i0_nA": 1}})
    assert cli.main(["anticross", "--config", str(cfg)]) == 0
    captured = capsys.readouterr()
    table = SweepTable.from_csv(captured.out)
    assert table.columns[-1] == "A"
    assert "minimum splitting" in captured.err


def test_converge(tmp_path, capsys):
    cfg = write(tmp_path, "conv.json", {"circuit": "flux", "ladder": [8, 12, 16]})
    assert cli.main(["converge", "--config", str(cfg)]) == 0
    captured = capsys.readouterr()
    assert "PASS" in captured.err
    assert SweepTable.from_csv(captured.out).metadata["passed"] == "True"


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, "res.json", {"omega_q_GHz": 5, "omega_t_GHz": 6})
    run = subprocess.run([sys.executable, "-m", "couplinglab", "spectrum", "--config", str(cfg)],
                         capture_output=True, text=True)
    assert run.returncode == 0
    assert "E_4" in run.stdout
