"""Tests for trace rendering and figure-of-merit extraction."""
import math

import numpy as np
import pytest
from scipy.special import ndtr

from psiotdr.config import AnalysisSettings
from psiotdr.errors import AnalysisError, BeatLengthNotDetected, ConfigurationError
from psiotdr.models.analysis_models import PeakReport
from psiotdr.models.detection_models import Histogram
from psiotdr.services import analysis_service
from psiotdr.services.analysis_service import (
    TraceAnalyzer,
    accuracy_experiment,
    configured_attenuation,
    display_level,
    pileup_corrected,
    trace_from_counts,
)
from psiotdr.services.preset_service import MM_BIN, get_preset
from psiotdr.utils.rng import derived_seed
from psiotdr.utils.units import distance_to_time, times_to_distances

FWHM_PER_RMS = 2.0 * math.sqrt(2.0 * math.log(2.0))


@pytest.fixture
def analyzer() -> TraceAnalyzer:
    return TraceAnalyzer(AnalysisSettings(pileup_correction=False))


def axis(bins: int, bin_width: float) -> np.ndarray:
    return times_to_distances((np.arange(bins) + 0.5) * bin_width)


def gaussian(z: np.ndarray, centre: float, fwhm: float, height: float) -> np.ndarray:
    sigma = fwhm / FWHM_PER_RMS
    return height * np.exp(-0.5 * ((z - centre) / sigma) ** 2)


def test_display_level():
    levels = display_level(np.array([100.0, 0.0]), -10.0)
    assert levels[0] == pytest.approx(0.0)
    assert levels[1] == pytest.approx(5.0 * math.log10(0.5) - 10.0)


def test_pileup_correction_undoes_geometric_suppression():
    shots = 1_000_000
    p = 0.01
    counts = shots * p * (1.0 - p) ** np.arange(200)
    corrected = pileup_corrected(counts, shots)
    np.testing.assert_allclose(corrected, -shots * math.log1p(-p), rtol=1e-9)


def test_trace_levels_are_normalized_by_shots():
    trace = trace_from_counts(np.array([1000.0, 1000.0]), MM_BIN, 0.0, 1000)
    np.testing.assert_allclose(trace.level_db, 0.0, atol=1e-12)
    assert trace.distance[0] == pytest.approx(0.5e-3, rel=1e-4)
    assert trace.pileup_corrected is False
    with pytest.raises(AnalysisError):
        trace_from_counts(np.array([]), MM_BIN, 0.0, 1)


def test_gaussian_peak_position_and_width(analyzer):
    z = axis(400, MM_BIN)
    counts = 10.0 + gaussian(z, 0.2003, 0.02, 1000.0)
    peaks = analyzer.find_peaks(trace_from_counts(counts, MM_BIN, 0.0, 10**7))

    assert len(peaks) == 1
    peak = peaks[0]
    assert peak.position == pytest.approx(0.2003, abs=1e-4)
    assert peak.fwhm == pytest.approx(0.02, rel=0.02)
    assert peak.height == pytest.approx(5.0 * math.log10(1010.0 / 10.0), abs=0.05)
    assert peak.isolated
    assert not peak.asymmetric
    assert not peak.undersampled


def test_peaks_one_fwhm_apart_merge_into_an_asymmetric_peak(analyzer):
    z = axis(400, MM_BIN)
    counts = 10.0 + gaussian(z, 0.15, 0.02, 1000.0) + gaussian(z, 0.17, 0.02, 500.0)
    peaks = analyzer.find_peaks(trace_from_counts(counts, MM_BIN, 0.0, 10**7))

    assert len(peaks) == 1
    assert peaks[0].asymmetric
    assert peaks[0].skewness > 0
    assert peaks[0].fwhm > 1.3 * 0.02


def test_undersampled_peak_is_fitted(analyzer):
    """A 50 ns pulse in 50 ns bins is reported in quadrature with the bin width."""
    bin_width = 50e-9
    z = axis(60, bin_width)
    spacing = z[1] - z[0]
    centre = z[30] + 0.3 * spacing
    sigma = spacing / FWHM_PER_RMS
    half = spacing / 2.0
    counts = 10.0 + 1e5 * (ndtr((z + half - centre) / sigma) - ndtr((z - half - centre) / sigma))

    peaks = analyzer.find_peaks(trace_from_counts(counts, bin_width, 0.0, 10**8))
    assert len(peaks) == 1
    peak = peaks[0]
    assert peak.undersampled
    assert peak.fwhm == pytest.approx(math.sqrt(2.0) * spacing, rel=0.05)
    assert peak.position == pytest.approx(centre, abs=0.05 * spacing)


def test_resolvable(analyzer):
    z = axis(400, MM_BIN)
    apart = trace_from_counts(
        10.0 + gaussian(z, 0.1, 0.02, 1000.0) + gaussian(z, 0.16, 0.02, 1000.0), MM_BIN, 0.0, 10**7
    )
    assert analyzer.resolvable(apart, 0.1, 0.16)

    close = trace_from_counts(
        10.0 + gaussian(z, 0.1, 0.02, 1000.0) + gaussian(z, 0.116, 0.02, 1000.0), MM_BIN, 0.0, 10**7
    )
    assert not analyzer.resolvable(close, 0.1, 0.116)


def test_two_point_resolution_needs_an_isolated_peak(analyzer):
    trace = trace_from_counts(np.full(10, 5.0), MM_BIN, 0.0, 100)
    merged = PeakReport(position=0.1, height=3.0, fwhm=0.02, area=10.0, isolated=False)
    with pytest.raises(AnalysisError):
        analyzer.two_point_resolution(trace, [merged])
    narrow = PeakReport(position=0.2, height=3.0, fwhm=0.011, area=10.0)
    wide = PeakReport(position=0.3, height=3.0, fwhm=0.015, area=10.0)
    assert analyzer.two_point_resolution(trace, [merged, wide, narrow]) == 0.011


def rayleigh_trace(shots: int = 10**9, length: float = 20_000.0, bins: int = 4000):
    bin_width = 50e-9
    z = axis(bins, bin_width)
    counts = np.where(z < length, 1e4 * 10.0 ** (-0.04 * z / 1000.0), 0.0)
    return trace_from_counts(counts, bin_width, 0.0, shots)


def test_fit_slope_recovers_the_attenuation(analyzer):
    fit = analyzer.fit_slope(rayleigh_trace(), 1000.0, 15000.0, configured_attenuation=0.2)
    assert fit.slope_db_per_km == pytest.approx(0.2, rel=0.005)
    assert fit.relative_error < 0.005
    assert fit.r_squared > 0.999
    assert fit.level_at(0.0) == pytest.approx(5.0 * math.log10(1e4) - 5.0 * 9, abs=0.01)


def test_fit_slope_errors(analyzer):
    trace = rayleigh_trace()
    with pytest.raises(ConfigurationError):
        analyzer.fit_slope(trace, 5000.0, 1000.0)
    with pytest.raises(AnalysisError):
        analyzer.fit_slope(trace, 1000.0, 1100.0)


def noisy_fiber(shots: int, rng: np.random.Generator, dark: float = 1e-3):
    """10 km of fiber at 0.2 dB/km followed by 5 km of dark counts."""
    bin_width = 50e-9
    z = axis(int(distance_to_time(15_000.0) / bin_width), bin_width)
    rate = np.where(z < 10_000.0, 5e-3 * 10.0 ** (-0.04 * z / 1000.0), 0.0) + dark
    return trace_from_counts(rng.poisson(shots * rate).astype(float), bin_width, 0.0, shots)


def test_noise_region(analyzer):
    trace = noisy_fiber(10**5, np.random.default_rng(4))
    explicit = analyzer.noise_region(trace, 10_100.0)
    assert trace.distance[explicit][0] >= 10_100.0

    automatic = analyzer.noise_region(trace)
    start = trace.distance[automatic][0]
    assert 10_000.0 < start < 10_500.0

    with pytest.raises(AnalysisError):
        analyzer.noise_region(trace, 16_000.0)


def test_dynamic_range_grows_with_integration_time(analyzer):
    """Ten times the shots lowers the noise peak by 2.5 display dB."""
    rng = np.random.default_rng(9)
    short, _ = analyzer.dynamic_range(noisy_fiber(10**5, rng), (500.0, 9000.0), 10_100.0)
    long, _ = analyzer.dynamic_range(noisy_fiber(10**6, rng), (500.0, 9000.0), 10_100.0)
    # Rayleigh at -11.5 dB against about 2.1 sigma of 100 dark counts
    assert short == pytest.approx(6.9, abs=0.3)
    assert long - short == pytest.approx(2.5, abs=0.4)


def test_dynamic_range_without_darks_gains_five_db_per_decade(analyzer):
    """An empty noise region peaks at the display floor, which drops 5 dB per decade of shots."""
    rng = np.random.default_rng(12)
    short, short_noise = analyzer.dynamic_range(noisy_fiber(10**5, rng, dark=1e-9), (500.0, 9000.0), 10_100.0)
    long, long_noise = analyzer.dynamic_range(noisy_fiber(10**6, rng, dark=1e-9), (500.0, 9000.0), 10_100.0)
    assert short_noise == pytest.approx(5.0 * math.log10(0.5) - 25.0)
    assert long_noise == pytest.approx(5.0 * math.log10(0.5) - 30.0)
    assert short == pytest.approx(15.0, abs=0.1)
    assert long - short == pytest.approx(5.0, abs=0.1)


def polarimetric_trace(beat_length, rng: np.random.Generator):
    bin_width = distance_to_time(0.5)
    z = axis(600, bin_width)
    pattern = 0.2 + (np.cos(2.0 * math.pi * z / beat_length) ** 2 if beat_length else 0.5)
    rate = 2e-3 * pattern * 10.0 ** (-0.04 * z / 1000.0)
    return trace_from_counts(rng.poisson(10**6 * rate).astype(float), bin_width, 0.0, 10**6)


def test_beat_length_from_polarimetric_fluctuations(analyzer):
    trace = polarimetric_trace(10.0, np.random.default_rng(2))
    assert analyzer.beat_length(trace, 0.0, 300.0) == pytest.approx(10.0, rel=0.05)


def test_flat_trace_has_no_beat_length(analyzer):
    trace = polarimetric_trace(None, np.random.default_rng(3))
    with pytest.raises(BeatLengthNotDetected):
        analyzer.beat_length(trace, 0.0, 300.0)
    with pytest.raises(AnalysisError):
        analyzer.beat_length(trace, 0.0, 2.0)


def test_analyze_reports_air_separation():
    """Two faces of a 3 cm air gap appear 3 cm / n_g apart on the fiber distance axis."""
    bins = 1000
    z = axis(bins, MM_BIN)
    counts = np.round(5.0 + gaussian(z, 0.5, 0.011, 2000.0) + gaussian(z, 0.5 + 0.03 / 1.468, 0.011, 1600.0))
    histogram = Histogram(bin_width=MM_BIN, origin=0.0, counts=counts.astype(np.int64), shots=10**7)

    report = TraceAnalyzer().analyze(histogram, air_regions=((0.5, 0.5 + 0.03 / 1.468),))
    assert len(report.peaks) == 2
    assert report.peak_separation == pytest.approx(0.03 / 1.468, abs=2e-4)
    assert report.air_separation == pytest.approx(0.03, abs=3e-4)
    assert report.two_point_resolution == pytest.approx(0.011, rel=0.05)

    plain = TraceAnalyzer().analyze(histogram)
    assert plain.air_separation is None
    assert set(plain.to_dict()) >= {"peaks", "delta_m", "slope_db_per_km", "dynamic_range_db", "beat_length_m"}


def test_analyze_turns_missing_figures_into_warnings():
    histogram = Histogram(bin_width=MM_BIN, origin=0.0, counts=np.full(100, 3, dtype=np.int64), shots=10**4)
    report = TraceAnalyzer().analyze(histogram, scenario=get_preset("fiber16km-potdr"))
    assert report.peaks == []
    assert report.slope is None
    assert report.beat_length is None
    assert report.warnings

    with pytest.raises(AnalysisError):
        TraceAnalyzer().analyze(histogram, fit_window=(0.01, 0.05))


def test_configured_attenuation():
    scenario = get_preset("fiber16km-otdr")
    assert configured_attenuation(scenario, (1000.0, 15000.0)) == 0.2
    assert configured_attenuation(scenario, (20_000.0, 30_000.0)) is None


def test_accuracy_experiment_validation():
    scenario = get_preset("pigtail2.3m-accuracy")
    with pytest.raises(ConfigurationError):
        accuracy_experiment(scenario, 1)
    with pytest.raises(ConfigurationError):
        accuracy_experiment(scenario, 3, seeds=[1, 2])


def test_accuracy_experiment_statistics(mocker):
    scenario = get_preset("pigtail2.3m-accuracy")
    measure = mocker.patch.object(
        analysis_service,
        "_measure_separation",
        side_effect=lambda scenario, repeat, seed, analyzer: 2.265 + 0.001 * repeat,
    )
    result = accuracy_experiment(scenario, 4, seed=99, threads=1)

    assert measure.call_count == 4
    assert result.n == 4
    assert result.mean == pytest.approx(2.2665)
    assert result.std == pytest.approx(math.sqrt(5e-6 / 3.0))
    assert result.seeds == tuple(derived_seed(99, i) for i in range(4))
    assert result.to_dict()["seeds"] == [str(s) for s in result.seeds]
