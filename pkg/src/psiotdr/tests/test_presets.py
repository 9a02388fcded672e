"""Tests for the built-in scenarios and their reference measurements."""
import math

import pytest

from psiotdr.config import SimulationSettings
from psiotdr.errors import BeatLengthNotDetected, ConfigurationError
from psiotdr.models.detection_models import DetectorModel, TacConfig, TacMode
from psiotdr.models.link_models import FiberEnd, FiberEndKind, FiberSegment, LinkPlan, Reflector
from psiotdr.models.photonics_models import JonesState
from psiotdr.models.scenario_models import Scenario
from psiotdr.services.analysis_service import TraceAnalyzer, accuracy_experiment
from psiotdr.services.detection_service import DetectionService, start_channel
from psiotdr.services.preset_service import (
    COARSE_LAUNCHED_PHOTONS,
    COARSE_WIDTH,
    PRESETS,
    config2_source,
    get_preset,
    list_presets,
    peak_power_for,
)
from psiotdr.services.scenario_service import (
    derived_quantities,
    display_context,
    dump_scenario,
    parse_scenario,
    simulate_scenario,
)
from psiotdr.utils.units import distance_to_time


@pytest.fixture
def service() -> DetectionService:
    return DetectionService(SimulationSettings(threads=1, progress=False))


@pytest.fixture
def analyzer() -> TraceAnalyzer:
    return TraceAnalyzer()


def analyze(scenario: Scenario, service: DetectionService, analyzer: TraceAnalyzer, **overrides):
    histogram = simulate_scenario(scenario, service=service, **overrides)
    return analyzer.analyze(histogram, scenario)


def test_preset_names():
    assert list_presets() == [
        "artefact1-config1",
        "artefact2-config2-0km",
        "artefact2-config2-20km-dsf",
        "artefact2-config2-50km-smf",
        "fiber16km-otdr",
        "fiber16km-potdr",
        "pigtail2.3m-accuracy",
        "dynamic-range-50km-3min",
        "dynamic-range-50km-30min",
    ]


def test_unknown_preset():
    with pytest.raises(ConfigurationError) as excinfo:
        get_preset("artefact3")
    assert excinfo.value.diagnostics[0].path == "preset"


@pytest.mark.parametrize("name", list(PRESETS))
def test_presets_survive_a_file_round_trip(name):
    scenario = get_preset(name)
    assert scenario.name == name
    assert parse_scenario(dump_scenario(scenario)) == scenario
    assert scenario.calibrated == tuple(sorted(scenario.calibrated))


def test_configuration_1_system_width():
    quantities = derived_quantities(get_preset("artefact1-config1")).quantities
    assert quantities["system_fwhm_s"] == pytest.approx(108e-12, rel=0.01)
    assert quantities["system_fwhm_m"] == pytest.approx(0.0110, rel=0.03)


def test_configuration_2_system_width():
    quantities = derived_quantities(get_preset("artefact2-config2-0km")).quantities
    assert quantities["system_fwhm_s"] == pytest.approx(206e-12, rel=0.01)
    assert quantities["system_fwhm_m"] == pytest.approx(0.0210, rel=0.03)


def test_configuration_1_starts_on_half_the_shots():
    scenario = get_preset("artefact1-config1")
    channel = start_channel(scenario.tac, scenario.source, scenario.start_detector)
    assert channel.probability == pytest.approx(0.5, abs=0.02)


def test_dynamic_range_presets():
    short = get_preset("dynamic-range-50km-3min")
    long = get_preset("dynamic-range-50km-30min")
    assert short.effective_repetition_rate == 1400.0
    assert short.effective_repetition_rate < derived_quantities(short).quantities["max_repetition_rate_hz"]
    assert 1.0 / short.effective_repetition_rate > short.tac.range
    assert long.shots_to_run / short.shots_to_run == 10.0


@pytest.mark.slow
def test_air_gap_measured_in_configuration_1(service, analyzer):
    report = analyze(get_preset("artefact1-config1"), service, analyzer)
    assert len(report.peaks) == 2
    assert report.air_separation == pytest.approx(0.03, abs=0.002)
    assert report.two_point_resolution == pytest.approx(0.0110, rel=0.15)


@pytest.mark.slow
def test_connector_and_cleave_behind_leads(service, analyzer):
    near = analyze(get_preset("artefact2-config2-0km"), service, analyzer)
    assert len(near.peaks) == 2
    assert all(p.fwhm == pytest.approx(0.021, rel=0.15) for p in near.peaks)
    assert near.peak_separation == pytest.approx(0.04, abs=0.002)

    shifted = analyze(get_preset("artefact2-config2-20km-dsf"), service, analyzer)
    assert len(shifted.peaks) == 2
    assert shifted.two_point_resolution == pytest.approx(near.two_point_resolution, rel=0.05)

    dispersed = analyze(get_preset("artefact2-config2-50km-smf"), service, analyzer)
    assert len(dispersed.peaks) == 1
    assert dispersed.peaks[0].asymmetric
    assert dispersed.peaks[0].fwhm == pytest.approx(0.051, rel=0.15)


@pytest.mark.slow
def test_rayleigh_slope_of_16km(service, analyzer):
    report = analyze(get_preset("fiber16km-otdr"), service, analyzer, shots=2_000_000)
    assert report.slope is not None
    assert report.slope.relative_error < 0.025


@pytest.mark.slow
def test_polarimetric_run_keeps_the_slope_and_finds_the_beat(service, analyzer):
    """The polarizer modulates the 16 km trace at the beat length without biasing the loss fit."""
    plain = analyze(get_preset("fiber16km-otdr"), service, analyzer, shots=2_000_000)
    polarimetric = analyze(get_preset("fiber16km-potdr"), service, analyzer, shots=2_000_000)
    assert polarimetric.slope.relative_error < 0.025
    assert polarimetric.slope.slope_db_per_km == pytest.approx(plain.slope.slope_db_per_km, rel=0.025)
    assert polarimetric.beat_length == pytest.approx(25.0, rel=0.02)
    assert plain.beat_length is None


@pytest.mark.slow
def test_dynamic_range_of_50km(service, analyzer):
    """About 10 dB after 30 min; dense dark noise makes ten times the shots worth 2.5 dB."""
    short = analyze(get_preset("dynamic-range-50km-3min"), service, analyzer)
    long = analyze(get_preset("dynamic-range-50km-30min"), service, analyzer)
    assert 9.0 <= long.dynamic_range <= 11.0
    assert long.dynamic_range - short.dynamic_range == pytest.approx(2.5, abs=1.0)
    assert long.slope.relative_error < 0.025


def beat_scenario(scrambler: bool) -> Scenario:
    """300 m of fiber with a 10 m beat length seen through a 45 degree polarizer."""
    return Scenario(
        name="beat-length",
        link=LinkPlan(
            (
                FiberSegment(length=300.0, beat_length=10.0, birefringence_axis=0.0),
                FiberEnd(FiberEndKind.TERMINATED),
            )
        ),
        source=config2_source(2e-9, peak_power_for(990_000.0, 2e-9)),
        stop_detector=DetectorModel(polarization_analyzer=JonesState.linear(math.pi / 4)),
        tac=TacConfig(mode=TacMode.CONFIGURATION_2, bin_width=distance_to_time(0.5), range=distance_to_time(300.0)),
        scrambler=scrambler,
        shots=1_000_000,
        seed=10,
    )


@pytest.mark.slow
def test_beat_length_from_a_polarimetric_run(service, analyzer):
    scenario = beat_scenario(scrambler=False)
    trace = analyzer.to_trace(simulate_scenario(scenario, service=service), display_context(scenario.link))
    assert analyzer.beat_length(trace, 0.0, 300.0) == pytest.approx(10.0, rel=0.05)

    scrambled = beat_scenario(scrambler=True)
    trace = analyzer.to_trace(simulate_scenario(scrambled, service=service), display_context(scrambled.link))
    with pytest.raises(BeatLengthNotDetected):
        analyzer.beat_length(trace, 0.0, 300.0)


@pytest.mark.slow
def test_pigtail_length_accuracy():
    result = accuracy_experiment(get_preset("pigtail2.3m-accuracy"), 10, threads=1)
    assert result.n == 10
    assert result.std <= 0.0015
    assert result.mean == pytest.approx(2.265, abs=0.003)


@pytest.mark.slow
def test_coarse_bins_report_an_undersampled_reflection(service, analyzer):
    """A 50 ns pulse in 50 ns bins reads as about 7.2 m."""
    scenario = Scenario(
        name="coarse-reflector",
        link=LinkPlan(
            (
                FiberSegment(length=1000.0),
                Reflector(reflectance=-30.0),
                FiberSegment(length=1000.0),
                FiberEnd(FiberEndKind.TERMINATED),
            )
        ),
        source=config2_source(COARSE_WIDTH, peak_power_for(COARSE_LAUNCHED_PHOTONS, COARSE_WIDTH)),
        stop_detector=DetectorModel(),
        tac=TacConfig(mode=TacMode.CONFIGURATION_2, bin_width=COARSE_WIDTH, range=distance_to_time(2100.0)),
        shots=200_000,
        seed=72,
    )
    report = analyze(scenario, service, analyzer)
    (peak,) = [p for p in report.peaks if abs(p.position - 1000.0) < 20.0]
    assert peak.undersampled
    assert peak.fwhm == pytest.approx(7.22, rel=0.10)
