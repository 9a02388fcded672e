"""Tests for the command-line front end."""
import json

import pytest

from psiotdr import app
from psiotdr.app import OtdrApp, main, parse_window
from psiotdr.errors import ConfigurationError
from psiotdr.models.analysis_models import AccuracyResult
from psiotdr.services.preset_service import get_preset, list_presets
from psiotdr.services.scenario_service import save_scenario

PRESET = "artefact2-config2-0km"


@pytest.fixture(autouse=True)
def quiet_logging(mocker):
    """Leave the root logger to pytest."""
    return mocker.patch("psiotdr.app.setup_logging")


@pytest.fixture
def scenario_file(tmp_path):
    return save_scenario(get_preset(PRESET), tmp_path / "scenario.json")


@pytest.fixture
def histogram_file(tmp_path, scenario_file):
    out = tmp_path / "histogram.csv"
    assert main(["simulate", str(scenario_file), "--out", str(out), "--shots", "1000000", "--seed", "4"]) == 0
    return out


def test_parse_window():
    assert parse_window("1,2.5") == (1.0, 2.5)
    with pytest.raises(ConfigurationError):
        parse_window("2,1")
    with pytest.raises(ConfigurationError):
        parse_window("x")


def test_preset_list(capsys):
    assert main(["preset", "--list"]) == 0
    assert capsys.readouterr().out.split() == list_presets()


def test_preset_then_validate(tmp_path, capsys):
    path = tmp_path / "preset.json"
    assert main(["preset", PRESET, "--out", str(path)]) == 0
    assert main(["validate", str(path)]) == 0
    out = capsys.readouterr().out
    assert f"ok: {PRESET}" in out
    assert "system_fwhm_m" in out


def test_unknown_preset(capsys):
    assert main(["preset", "artefact3"]) == 2
    assert "unknown preset" in capsys.readouterr().err


def test_bad_arguments(capsys):
    assert main(["simulate"]) == 2
    assert capsys.readouterr().err.startswith("error: arguments")
    assert main(["analyze", "h.csv", "--fit-window", "5,1"]) == 2


def test_malformed_scenario(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{\n  \"name\": \n")
    assert main(["validate", str(path)]) == 2
    assert f"error: {path}:" in capsys.readouterr().err


def test_zero_shots(tmp_path, scenario_file, capsys):
    out = tmp_path / "histogram.csv"
    assert main(["simulate", str(scenario_file), "--out", str(out), "--shots", "0"]) == 2
    assert "shots must be ≥ 1" in capsys.readouterr().err
    assert not out.exists()


def test_simulate_analyze_and_trace(tmp_path, scenario_file, histogram_file, capsys):
    report_path = tmp_path / "report.json"
    assert main(["analyze", str(histogram_file), "--scenario", str(scenario_file), "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert len(report["peaks"]) == 2
    assert report["peak_separation_m"] == pytest.approx(0.04, abs=0.003)

    trace_path = tmp_path / "trace.csv"
    plot_path = tmp_path / "trace.svg"
    args = ["trace", str(histogram_file), "--scenario", str(scenario_file)]
    assert main(args + ["--out", str(trace_path), "--plot", str(plot_path)]) == 0
    assert trace_path.read_text().startswith("distance_m,level_db,counts\n")
    assert plot_path.read_bytes().startswith(b"<?xml")


def test_analyze_to_stdout(histogram_file, capsys):
    capsys.readouterr()
    assert main(["analyze", str(histogram_file)]) == 0
    assert "peaks" in json.loads(capsys.readouterr().out)


def test_failed_explicit_fit_exits_with_analysis_code(histogram_file, capsys):
    assert main(["analyze", str(histogram_file), "--fit-window", "0.5,0.6"]) == 3
    assert "slope fit needs" in capsys.readouterr().err


def test_same_seed_gives_identical_files(tmp_path, scenario_file):
    outputs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert main(["simulate", str(scenario_file), "--out", str(out), "--shots", "20000", "--seed", "9"]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_unexpected_failure(mocker, capsys):
    mocker.patch.object(OtdrApp, "cmd_validate", side_effect=RuntimeError("boom"))
    assert main(["validate", "scenario.json"]) == 1
    assert "error: boom" in capsys.readouterr().err


def test_metrics_port_starts_monitoring(mocker):
    start = mocker.patch.object(app, "start_monitoring")
    assert main(["--metrics-port", "9101", "preset", "--list"]) == 0
    start.assert_called_once_with(9101)


def test_accuracy_report(tmp_path, scenario_file, mocker):
    result = AccuracyResult(mean=0.04, std=0.001, n=3, distances=(0.039, 0.04, 0.041), seeds=(1, 2, 3))
    experiment = mocker.patch.object(app, "accuracy_experiment", return_value=result)
    out = tmp_path / "accuracy.json"
    assert main(["accuracy", str(scenario_file), "--repeats", "3", "--seed", "5", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["std_m"] == 0.001
    assert experiment.call_args.args[1] == 3
    assert experiment.call_args.kwargs["seed"] == 5


def test_accuracy_needs_two_repeats(scenario_file, capsys):
    assert main(["accuracy", str(scenario_file), "--repeats", "1"]) == 2
    assert "at least 2 repeats" in capsys.readouterr().err
