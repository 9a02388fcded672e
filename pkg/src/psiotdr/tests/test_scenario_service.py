"""Tests for scenario files, validation and derived quantities."""
import copy
import dataclasses
import json

import pytest

from psiotdr.errors import ConfigurationError
from psiotdr.models.detection_models import TacMode
from psiotdr.models.scenario_schema import scenario_hash
from psiotdr.services.preset_service import get_preset
from psiotdr.services.scenario_service import (
    air_regions,
    derived_quantities,
    dump_scenario,
    expected_scenario_histogram,
    load_scenario,
    parse_scenario,
    save_scenario,
    validate_scenario,
    validate_scenario_data,
)

MINIMAL = {
    "name": "minimal",
    "shots": 1000,
    "link": {
        "elements": [
            {"kind": "fiber", "length_m": 10.0},
            {"kind": "fiber_end", "end": "cleaved"},
        ]
    },
    "source": {"fwhm_s": 30e-12, "peak_power_w": 1e-3, "trigger_jitter_rms_s": 7.64e-11},
    "tac": {"mode": "configuration_2", "bin_width_s": 1e-11, "range_s": 1e-9, "start_delay_s": 9.5e-8},
}


def document(**changes) -> dict:
    data = copy.deepcopy(MINIMAL)
    data.update(changes)
    return data


def diagnostics_of(data: dict):
    with pytest.raises(ConfigurationError) as excinfo:
        parse_scenario(json.dumps(data))
    return excinfo.value.diagnostics


def test_parse_minimal_scenario():
    scenario = parse_scenario(json.dumps(MINIMAL))
    assert scenario.name == "minimal"
    assert scenario.mode is TacMode.CONFIGURATION_2
    assert len(scenario.link.elements) == 2
    assert scenario.shots_to_run == 1000
    assert scenario.stop_detector.efficiency == 0.008


def test_syntax_error_carries_line_and_column():
    with pytest.raises(ConfigurationError) as excinfo:
        parse_scenario('{"name": }', "bad.json")
    assert excinfo.value.diagnostics[0].path.startswith("bad.json:1:")


def test_unknown_field_is_rejected():
    paths = [d.path for d in diagnostics_of(document(colour="red"))]
    assert "colour" in paths


def test_configuration_1_requires_a_start_detector():
    data = document()
    data["tac"]["mode"] = "configuration_1"
    assert [d.path for d in diagnostics_of(data)] == ["start_detector"]


def test_events_after_fiber_end_are_located():
    data = document()
    data["link"]["elements"].append({"kind": "reflector", "reflectance_db": -20.0})
    diagnostics = diagnostics_of(data)
    assert diagnostics[0].path == "link.elements[2] (reflector)"


def test_every_violation_is_reported_together():
    data = document()
    data["link"]["elements"][0]["length_m"] = -1.0
    data["source"]["fwhm_s"] = -1.0
    data["tac"]["bin_width_s"] = 0.0
    paths = [d.path for d in diagnostics_of(data)]
    assert "link.elements[0] (fiber)" in paths
    assert "source" in paths
    assert "tac" in paths


def test_shots_and_duration_are_exclusive():
    paths = [d.path for d in diagnostics_of(document(duration_s=10.0))]
    assert paths == ["shots"]


def test_dump_and_parse_round_trip():
    scenario = parse_scenario(json.dumps(MINIMAL))
    text = dump_scenario(scenario)
    assert text.endswith("\n")
    assert parse_scenario(text) == scenario


def test_derived_quantities():
    scenario = get_preset("artefact2-config2-0km")
    report = derived_quantities(scenario)
    quantities = report.quantities
    assert quantities["round_trip_time_s"] == pytest.approx(scenario.link.round_trip_time)
    assert quantities["repetition_rate_hz"] == pytest.approx(quantities["max_repetition_rate_hz"])
    assert 0 < quantities["stop_probability_per_shot"] < 0.05
    assert quantities["nep_w_per_sqrt_hz"] == pytest.approx(1.0125e-15, rel=0.05)
    assert quantities["histogram_bins"] == scenario.tac.bins
    assert report.warnings == []
    assert report.lines()[0] == "ok: artefact2-config2-0km"


def test_pileup_warning(two_reflectors):
    report = derived_quantities(two_reflectors(launched_photons=5000.0))
    assert report.quantities["stop_probability_per_shot"] > 0.05
    assert any("pile-up" in w for w in report.warnings)


def test_dispersion_warning_only_behind_standard_fiber():
    assert any("dispersion-limited" in w for w in derived_quantities(get_preset("artefact2-config2-50km-smf")).warnings)
    assert not derived_quantities(get_preset("artefact2-config2-20km-dsf")).warnings


def test_repetition_rate_above_the_round_trip_limit():
    scenario = dataclasses.replace(get_preset("artefact2-config2-0km"), repetition_rate=1e9)
    with pytest.raises(ConfigurationError) as excinfo:
        derived_quantities(scenario)
    assert excinfo.value.diagnostics[0].path == "repetition_rate_hz"


def test_validate_scenario_file(tmp_path):
    path = save_scenario(get_preset("artefact2-config2-0km"), tmp_path / "scenario.json")
    report = validate_scenario(path)
    assert report.scenario == load_scenario(path)
    assert "system_fwhm_m" in report.quantities
    assert validate_scenario_data(json.loads(path.read_text())).quantities == report.quantities


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ConfigurationError) as excinfo:
        load_scenario(tmp_path / "missing.json")
    assert "cannot read scenario file" in str(excinfo.value)


def test_hash_ignores_the_seed():
    scenario = get_preset("pigtail2.3m-accuracy")
    assert scenario_hash(dataclasses.replace(scenario, seed=5)) == scenario_hash(scenario)
    assert scenario_hash(dataclasses.replace(scenario, shots=5)) != scenario_hash(scenario)


def test_air_regions_on_the_distance_axis():
    ((start, end),) = air_regions(get_preset("artefact1-config1"))
    assert start == pytest.approx(0.5)
    assert end - start == pytest.approx(0.03 / 1.468)


def test_expected_histogram_uses_expected_starts():
    scenario = get_preset("artefact1-config1")
    default = expected_scenario_histogram(scenario)
    explicit = expected_scenario_histogram(scenario, starts=scenario.shots)
    assert default.sum() / explicit.sum() == pytest.approx(0.5, abs=0.02)


def test_duration_sets_the_shot_count():
    scenario = get_preset("fiber16km-otdr")
    assert scenario.shots is None
    assert scenario.shots_to_run == int(scenario.effective_repetition_rate * 1800.0)
