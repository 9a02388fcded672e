"""Histogram, trace, report and plot files.

Every artifact is written to a temporary file next to its target and renamed
into place, so a failed run never leaves a half-written file behind.
"""
import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from psiotdr.errors import ConfigurationError, Diagnostic  # noqa: E402
from psiotdr.models.analysis_models import AnalysisReport, PeakReport, Trace  # noqa: E402
from psiotdr.models.detection_models import Histogram  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

HISTOGRAM_HEADER = ("bin_width_s", "origin_s", "shots", "seed", "scenario_hash")
HISTOGRAM_COLUMNS = ("bin_index", "count")
TRACE_COLUMNS = ("distance_m", "level_db", "counts")


def atomic_write_bytes(path: PathLike, data: bytes) -> Path:
    """Write ``data`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.info(f"Wrote {path} ({len(data)} bytes)")
    return path


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


# Histograms


def histogram_to_csv(histogram: Histogram) -> str:
    """Header rows, then one ``bin_index,count`` row per bin."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["bin_width_s", repr(float(histogram.bin_width))])
    writer.writerow(["origin_s", repr(float(histogram.origin))])
    writer.writerow(["shots", int(histogram.shots)])
    writer.writerow(["seed", "" if histogram.seed is None else int(histogram.seed)])
    writer.writerow(["scenario_hash", histogram.scenario_hash])
    writer.writerow(HISTOGRAM_COLUMNS)
    writer.writerows(enumerate(int(c) for c in histogram.counts))
    return buffer.getvalue()


def histogram_from_csv(text: str, source: str = "<histogram>") -> Histogram:
    """Parse the histogram CSV format, reporting the offending line on error."""
    rows = list(csv.reader(io.StringIO(text)))
    header: Dict[str, str] = {}
    line = 0
    for line, row in enumerate(rows, start=1):
        if tuple(row) == HISTOGRAM_COLUMNS:
            break
        if len(row) != 2 or row[0] not in HISTOGRAM_HEADER:
            raise ConfigurationError(Diagnostic(f"{source}:{line}", f"unexpected header row {','.join(row)!r}"))
        header[row[0]] = row[1]
    else:
        raise ConfigurationError(Diagnostic(source, "missing 'bin_index,count' column row"))

    missing = [key for key in HISTOGRAM_HEADER if key not in header]
    if missing:
        raise ConfigurationError([Diagnostic(source, f"missing header row '{key}'") for key in missing])

    counts: List[int] = []
    for number, row in enumerate(rows[line:], start=line + 1):
        if not row:
            continue
        try:
            index, count = int(row[0]), int(row[1])
        except (IndexError, ValueError):
            raise ConfigurationError(Diagnostic(f"{source}:{number}", f"bad histogram row {','.join(row)!r}"))
        if index != len(counts):
            raise ConfigurationError(Diagnostic(f"{source}:{number}", f"expected bin {len(counts)}, got {index}"))
        counts.append(count)

    try:
        return Histogram(
            bin_width=float(header["bin_width_s"]),
            origin=float(header["origin_s"]),
            counts=np.asarray(counts, dtype=np.int64),
            shots=int(header["shots"]),
            seed=int(header["seed"]) if header["seed"] else None,
            scenario_hash=header["scenario_hash"],
        )
    except ConfigurationError as e:
        raise ConfigurationError([Diagnostic(source, d.message) for d in e.diagnostics]) from e
    except ValueError as e:
        raise ConfigurationError(Diagnostic(source, f"bad header value: {e}")) from e


def write_histogram(histogram: Histogram, path: PathLike) -> Path:
    return atomic_write_text(path, histogram_to_csv(histogram))


def read_histogram(path: PathLike) -> Histogram:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(Diagnostic(str(path), f"cannot read histogram file: {e.strerror or e}")) from e
    return histogram_from_csv(text, str(path))


# Traces and reports


def trace_to_csv(trace: Trace) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for distance, level, count in zip(trace.distance, trace.level_db, trace.counts):
        writer.writerow([f"{distance:.6f}", f"{level:.6f}", int(count)])
    return buffer.getvalue()


def write_trace(trace: Trace, path: PathLike) -> Path:
    return atomic_write_text(path, trace_to_csv(trace))


def report_to_json(report: Union[AnalysisReport, Dict[str, Any]]) -> str:
    data = report.to_dict() if hasattr(report, "to_dict") else report
    return json.dumps(data, indent=2, allow_nan=False) + "\n"


def write_report(report: Union[AnalysisReport, Dict[str, Any]], path: PathLike) -> Path:
    try:
        text = report_to_json(report)
    except ValueError as e:
        raise ConfigurationError(f"report holds a non-finite value: {e}") from e
    return atomic_write_text(path, text)


# Plots


def plot_trace(
    trace: Trace,
    path: PathLike,
    peaks: Optional[Sequence[PeakReport]] = None,
    title: str = "",
) -> Path:
    """SVG of the dB trace with peaks marked and air regions shaded."""
    with plt.rc_context({"svg.hashsalt": "psiotdr", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        try:
            ax.plot(trace.distance, trace.level_db, linewidth=0.8, color="tab:blue")
            for start, end in trace.air_regions:
                ax.axvspan(start, end, color="tab:orange", alpha=0.15, label="air")
            for peak in peaks or ():
                ax.axvline(peak.position, color="tab:red", linewidth=0.6, linestyle="--")
                ax.annotate(
                    f"{peak.position:.4g} m\nFWHM {peak.fwhm:.3g} m",
                    xy=(peak.position, float(trace.level_db[peak.index])),
                    fontsize=7,
                    ha="left",
                    va="bottom",
                )
            ax.set_xlabel("distance (m)")
            ax.set_ylabel("level (dB, 5 log10 counts per shot)")
            if title:
                ax.set_title(title)
            ax.grid(True, alpha=0.3)
            buffer = io.BytesIO()
            fig.savefig(buffer, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return atomic_write_bytes(path, buffer.getvalue())
