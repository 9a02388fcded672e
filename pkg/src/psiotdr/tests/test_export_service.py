"""Tests for histogram, trace, report and plot files."""
import json

import numpy as np
import pytest

from psiotdr.errors import ConfigurationError
from psiotdr.models.analysis_models import AnalysisReport, PeakReport
from psiotdr.models.detection_models import Histogram
from psiotdr.services.analysis_service import trace_from_counts
from psiotdr.services.export_service import (
    atomic_write_text,
    histogram_from_csv,
    histogram_to_csv,
    plot_trace,
    read_histogram,
    report_to_json,
    trace_to_csv,
    write_histogram,
    write_report,
)
from psiotdr.services.preset_service import MM_BIN


@pytest.fixture
def histogram() -> Histogram:
    return Histogram(
        bin_width=5e-08,
        origin=0.0,
        counts=np.array([0, 3, 5], dtype=np.int64),
        shots=100,
        seed=7,
        scenario_hash="abc123",
    )


def test_histogram_csv_layout(histogram):
    lines = histogram_to_csv(histogram).splitlines()
    assert lines == [
        "bin_width_s,5e-08",
        "origin_s,0.0",
        "shots,100",
        "seed,7",
        "scenario_hash,abc123",
        "bin_index,count",
        "0,0",
        "1,3",
        "2,5",
    ]


def test_histogram_file_round_trip(histogram, tmp_path):
    path = write_histogram(histogram, tmp_path / "run" / "histogram.csv")
    assert read_histogram(path).same_as(histogram)

    unseeded = Histogram(bin_width=MM_BIN, origin=1.234e-9, counts=np.zeros(4), shots=1)
    assert histogram_from_csv(histogram_to_csv(unseeded)).same_as(unseeded)


def test_bad_row_is_located(histogram):
    text = histogram_to_csv(histogram).replace("1,3\n", "1,x\n")
    with pytest.raises(ConfigurationError) as excinfo:
        histogram_from_csv(text, "h.csv")
    assert excinfo.value.diagnostics[0].path == "h.csv:8"


def test_skipped_bin_is_located(histogram):
    text = histogram_to_csv(histogram).replace("1,3\n", "4,3\n")
    with pytest.raises(ConfigurationError) as excinfo:
        histogram_from_csv(text, "h.csv")
    assert "expected bin 1" in str(excinfo.value)


def test_header_problems(histogram):
    text = histogram_to_csv(histogram)
    with pytest.raises(ConfigurationError) as excinfo:
        histogram_from_csv(text.replace("shots,100\n", ""), "h.csv")
    assert "missing header row 'shots'" in str(excinfo.value)

    with pytest.raises(ConfigurationError) as excinfo:
        histogram_from_csv("colour,red\n" + text, "h.csv")
    assert excinfo.value.diagnostics[0].path == "h.csv:1"

    with pytest.raises(ConfigurationError):
        histogram_from_csv(text.replace("bin_index,count\n", ""), "h.csv")

    with pytest.raises(ConfigurationError) as excinfo:
        histogram_from_csv(text.replace("shots,100", "shots,2"), "h.csv")
    assert excinfo.value.diagnostics[0].path == "h.csv"


def test_missing_histogram_file(tmp_path):
    with pytest.raises(ConfigurationError):
        read_histogram(tmp_path / "absent.csv")


def test_failed_write_leaves_nothing_behind(tmp_path, mocker):
    mocker.patch("psiotdr.services.export_service.os.replace", side_effect=OSError("disk full"))
    with pytest.raises(OSError):
        atomic_write_text(tmp_path / "report.json", "{}")
    assert list(tmp_path.iterdir()) == []


def test_trace_csv():
    trace = trace_from_counts(np.array([100.0, 0.0]), MM_BIN, 0.0, 1)
    lines = trace_to_csv(trace).splitlines()
    assert lines[0] == "distance_m,level_db,counts"
    assert lines[1] == "0.000500,10.000000,100"
    assert lines[2] == "0.001500,-1.505150,0"


def test_report_json(tmp_path):
    report = AnalysisReport(peaks=[PeakReport(position=1.0, height=10.0, fwhm=0.021, area=100.0)])
    data = json.loads(report_to_json(report))
    assert data["peaks"][0]["fwhm_m"] == 0.021
    assert data["delta_m"] is None

    path = write_report(report, tmp_path / "report.json")
    assert json.loads(path.read_text()) == data


def test_non_finite_report_is_rejected(tmp_path):
    with pytest.raises(ConfigurationError):
        write_report(AnalysisReport(dynamic_range=float("nan")), tmp_path / "report.json")
    assert not (tmp_path / "report.json").exists()


def test_plot_is_reproducible(tmp_path):
    z = np.arange(200)
    counts = 5.0 + 1000.0 * np.exp(-0.5 * ((z - 100) / 5.0) ** 2)
    trace = trace_from_counts(counts, MM_BIN, 0.0, 10**6, air_regions=((0.05, 0.07),))
    peak = PeakReport(position=float(trace.distance[100]), height=10.0, fwhm=0.012, area=1.0, index=100)

    first = plot_trace(trace, tmp_path / "a.svg", [peak], title="test")
    second = plot_trace(trace, tmp_path / "b.svg", [peak], title="test")
    assert first.read_bytes().startswith(b"<?xml")
    assert first.read_bytes() == second.read_bytes()
