import json

import pytest
from openpyxl import load_workbook

from src.scenario_cli import EXIT_DOMAIN, EXIT_OK, build_parser, main


def test_parser_knows_every_subcommand():
    parser = build_parser()
    for argv in (["evolve", "s.json"], ["laplace", "s.json"], ["spectrum", "s.json"],
                 ["figure", "fig2a"], ["sweep", "s.json"], ["fit", "c.csv", "--t0", "14"]):
        assert parser.parse_args(argv).command == argv[0]
    with pytest.raises(SystemExit):
        parser.parse_args(["figure", "fig9z"])


def test_evolve_writes_curves_and_field(small_scenario_data, write_scenario, tmp_path, capsys):
    output = tmp_path / "out"
    code = main(["--output-dir", str(output), "evolve", str(write_scenario(small_scenario_data)), "--field"])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["scenario"] == "petit"
    assert (output / "petit__00__oracle.csv").exists()
    assert (output / "petit__00__field.csv").exists()
    assert (output / "petit__manifest.json").exists()
    lines = (output / "petit__00__trajectory.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t_2J,Pe_1,norm"
    assert len(lines) == 62
    manifest = json.loads((output / "petit__manifest.json").read_text(encoding="utf-8"))
    assert manifest["points"][0]["files"]["trajectory"] == "petit__00__trajectory.csv"


def test_laplace_does_not_write_the_trajectory(small_scenario_data, write_scenario, tmp_path):
    output = tmp_path / "out"
    assert main(["--output-dir", str(output), "laplace", str(write_scenario(small_scenario_data))]) == EXIT_OK
    assert not (output / "petit__00__trajectory.csv").exists()


def test_laplace_adds_the_resolvent_curve(small_scenario_data, write_scenario, tmp_path):
    output = tmp_path / "out"
    assert main(["--output-dir", str(output), "laplace", str(write_scenario(small_scenario_data))]) == EXIT_OK
    assert (output / "petit__00__resolvent.csv").exists()


def test_spectrum_subcommand(small_scenario_data, write_scenario, tmp_path):
    output = tmp_path / "out"
    data = {**small_scenario_data, "k_points": 51}
    assert main(["--output-dir", str(output), "spectrum", str(write_scenario(data))]) == EXIT_OK
    lines = (output / "petit__00__spectrum.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "k,omega_2J,re_r,im_r,R,T"
    assert len(lines) == 52


def test_xlsx_export(small_scenario_data, write_scenario, tmp_path):
    output = tmp_path / "out"
    data = {**small_scenario_data, "sweep": {"parameter": "dx", "values": [3, 5]}}
    assert main(["--output-dir", str(output), "--xlsx", "sweep", str(write_scenario(data))]) == EXIT_OK
    workbook = load_workbook(output / "petit.xlsx")
    assert workbook.sheetnames == ["Résumé", "point_00", "point_01"]
    assert workbook["point_00"]["A1"].value == "t_2J"
    assert workbook["point_00"]["B1"].value == "oracle"


def test_fit_subcommand(small_scenario_data, write_scenario, tmp_path, capsys):
    output = tmp_path / "out"
    main(["--output-dir", str(output), "evolve", str(write_scenario(small_scenario_data))])
    capsys.readouterr()
    code = main(["fit", str(output / "petit__00__oracle.csv"), "--t0", "6", "--solver", "oracle"])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["t0"] == 6.0
    assert payload["before"]["rate"] > 0


def test_domain_errors_exit_with_json(small_scenario_data, write_scenario, tmp_path, capsys):
    data = dict(small_scenario_data)
    del data["J2"]
    code = main(["--output-dir", str(tmp_path), "evolve", str(write_scenario(data))])
    assert code == EXIT_DOMAIN
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "ScenarioError"
    assert any(field.startswith("J2") for field in error["context"]["fields"])


def test_unknown_scenario_exits_with_domain_code(tmp_path, capsys):
    code = main(["--output-dir", str(tmp_path), "sweep", str(tmp_path / "absent.json")])
    assert code == EXIT_DOMAIN
    assert "ScenarioError" in capsys.readouterr().err
