"""Turn histograms into dB traces and extract the figures of merit."""
import logging
import math
import time
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy import signal, stats
from scipy.ndimage import uniform_filter1d
from scipy.optimize import curve_fit
from scipy.special import ndtr

from psiotdr import monitoring
from psiotdr.config import AnalysisSettings, settings
from psiotdr.errors import AnalysisError, BeatLengthNotDetected, ConfigurationError
from psiotdr.models.analysis_models import AccuracyResult, AnalysisReport, PeakReport, SlopeFit, Trace
from psiotdr.models.detection_models import Histogram
from psiotdr.models.link_models import FiberSegment
from psiotdr.models.scenario_models import Scenario
from psiotdr.services.detection_service import DetectionService
from psiotdr.services.scenario_service import air_regions as scenario_air_regions
from psiotdr.services.scenario_service import display_context, simulate_scenario
from psiotdr.utils.rng import derived_seed
from psiotdr.utils.units import DEFAULT_CONTEXT, FWHM_PER_RMS, GroupIndexContext, quadrature_width, times_to_distances

logger = logging.getLogger(__name__)

FLOOR_COUNTS = 0.5
MIN_NOISE_SAMPLES = 20
MIN_BEAT_SAMPLES = 16
SKEW_FRACTION = 0.25
SMOOTHING_BINS = 21


def display_level(counts: np.ndarray, offset_db: float) -> np.ndarray:
    """5*log10(counts) + offset, with non-positive counts at the floor level."""
    counts = np.asarray(counts, dtype=float)
    safe = np.where(counts > 0, counts, FLOOR_COUNTS)
    return 5.0 * np.log10(safe) + offset_db


def pileup_corrected(counts: np.ndarray, shots: int) -> np.ndarray:
    """First-photon correction: expected detections per bin had no earlier stop blocked them."""
    counts = np.asarray(counts, dtype=float)
    if shots <= 0:
        return counts.copy()
    remaining = shots - np.concatenate([[0.0], np.cumsum(counts)[:-1]])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(remaining > 0, counts / remaining, 0.0)
    ratio = np.clip(ratio, 0.0, 1.0 - 1e-12)
    return -shots * np.log1p(-ratio)


def trace_from_counts(
    counts: np.ndarray,
    bin_width: float,
    origin: float,
    shots: int,
    ctx: GroupIndexContext = DEFAULT_CONTEXT,
    corrected: Optional[np.ndarray] = None,
    air_regions: Sequence[Tuple[float, float]] = (),
) -> Trace:
    """Build a trace from (possibly non-integer) counts."""
    counts = np.asarray(counts, dtype=float)
    if counts.size == 0:
        raise AnalysisError("cannot build a trace from an empty histogram")
    corrected = counts if corrected is None else np.asarray(corrected, dtype=float)
    offset = -5.0 * math.log10(shots) if shots > 0 else 0.0
    distance = times_to_distances(origin + (np.arange(counts.size) + 0.5) * bin_width, ctx)
    return Trace(
        distance=distance,
        level_db=display_level(corrected, offset),
        counts=counts,
        corrected=corrected,
        bin_width=bin_width,
        origin=origin,
        shots=shots,
        offset_db=offset,
        floor_db=5.0 * math.log10(FLOOR_COUNTS) + offset,
        pileup_corrected=corrected is not counts,
        ctx=ctx,
        air_regions=tuple(tuple(r) for r in air_regions),
    )


def _bin_integrated_gaussian(bin_width: float):
    half = bin_width / 2.0

    def model(x, amplitude, centre, sigma):
        sigma = abs(sigma) + 1e-15
        return amplitude * (ndtr((x + half - centre) / sigma) - ndtr((x - half - centre) / sigma))

    return model


class TraceAnalyzer:
    """Extracts peaks, resolution, slope, dynamic range and beat length from traces."""

    def __init__(self, analysis_settings: Optional[AnalysisSettings] = None):
        self.settings = analysis_settings or settings.analysis

    def to_trace(
        self,
        histogram: Histogram,
        ctx: GroupIndexContext = DEFAULT_CONTEXT,
        pileup_correction: Optional[bool] = None,
        air_regions: Sequence[Tuple[float, float]] = (),
    ) -> Trace:
        """Render a histogram as level versus one-way distance."""
        if histogram.counts.size == 0:
            raise AnalysisError("cannot build a trace from an empty histogram")
        if pileup_correction is None:
            pileup_correction = self.settings.pileup_correction
        counts = histogram.counts.astype(float)
        corrected = pileup_corrected(counts, histogram.shots) if pileup_correction else None
        return trace_from_counts(
            counts,
            histogram.bin_width,
            histogram.origin,
            histogram.shots,
            ctx,
            corrected=corrected,
            air_regions=air_regions,
        )

    # Peaks

    def find_peaks(self, trace: Trace, min_prominence: Optional[float] = None) -> List[PeakReport]:
        """Reflection peaks standing at least ``min_prominence`` dB above their baseline."""
        if len(trace) == 0:
            raise AnalysisError("cannot search peaks in an empty trace")
        if min_prominence is None:
            min_prominence = self.settings.min_prominence_db
        if min_prominence <= 0:
            raise ConfigurationError("min_prominence must be positive")
        began = time.perf_counter()
        candidates, props = signal.find_peaks(trace.level_db, prominence=min_prominence)
        peaks = []
        for n, index in enumerate(candidates):
            report = self._measure_peak(
                trace,
                int(index),
                int(props["left_bases"][n]),
                int(props["right_bases"][n]),
                float(props["prominences"][n]),
            )
            if report is not None:
                peaks.append(report)
        monitoring.analysis_duration.labels(operation="find_peaks").observe(time.perf_counter() - began)
        logger.debug(f"Found {len(peaks)} peaks out of {len(candidates)} candidates")
        return peaks

    def _measure_peak(
        self,
        trace: Trace,
        index: int,
        left_base: int,
        right_base: int,
        prominence: float,
    ) -> Optional[PeakReport]:
        counts = trace.corrected
        x = trace.distance
        spacing = trace.spacing or 1.0
        left_level = self._local_level(counts, left_base)
        right_level = self._local_level(counts, right_base)
        apex = float(counts[index])
        # significance against the higher valley, widths against the lower one
        if (apex - max(left_level, right_level)) / math.sqrt(max(apex, 1.0)) < self.settings.min_peak_significance:
            return None
        base = min(left_level, right_level)

        position, apex_fit = self._parabolic_apex(x, counts, index, base, base + (apex - base) / 2.0)
        half = base + (apex_fit - base) / 2.0
        left, left_isolated = self._crossing(counts, index, left_base, half, -1)
        right, right_isolated = self._crossing(counts, index, right_base, half, +1)
        isolated = left_isolated and right_isolated
        x_left = float(np.interp(left, np.arange(x.size), x))
        x_right = float(np.interp(right, np.arange(x.size), x))
        if left_isolated and not right_isolated:
            fwhm = 2.0 * (position - x_left)
        elif right_isolated and not left_isolated:
            fwhm = 2.0 * (x_right - position)
        else:
            fwhm = x_right - x_left
        fwhm = max(float(fwhm), spacing)

        undersampled = fwhm / spacing < self.settings.min_bins_per_fwhm
        if undersampled:
            fitted = self._fit_undersampled(x, counts, index, left_base, right_base, base, spacing, apex)
            if fitted is not None:
                position, fwhm, apex_fit = fitted

        lo = int(max(left_base, math.floor(left)))
        hi = int(min(right_base, math.ceil(right)))
        area = float(np.sum(counts[lo:hi + 1] - base))
        skewness = self._skewness(x, counts, index, left_base, right_base, base, apex_fit)
        height = 5.0 * math.log10(max(apex_fit, FLOOR_COUNTS)) - 5.0 * math.log10(max(base, FLOOR_COUNTS))
        return PeakReport(
            position=float(position),
            height=float(height),
            fwhm=float(fwhm),
            area=area,
            apex_counts=float(apex_fit),
            baseline_counts=float(base),
            skewness=float(skewness),
            asymmetric=bool(abs(skewness) > self.settings.asymmetry_threshold),
            isolated=bool(isolated),
            undersampled=bool(undersampled),
            prominence_db=float(prominence),
            index=index,
        )

    @staticmethod
    def _local_level(counts: np.ndarray, index: int, half_width: int = 2) -> float:
        lo = max(0, index - half_width)
        return float(np.median(counts[lo:index + half_width + 1]))

    @staticmethod
    def _crossing(counts: np.ndarray, index: int, base_index: int, half: float, step: int) -> Tuple[float, bool]:
        """Fractional index where counts fall to ``half`` walking away from the apex.

        The second value is False when the valley is reached first.
        """
        i = index
        while True:
            j = i + step
            if (step < 0 and j < base_index) or (step > 0 and j > base_index) or j < 0 or j >= counts.size:
                return float(i), False
            if counts[j] <= half:
                c_i, c_j = counts[i], counts[j]
                frac = (c_i - half) / (c_i - c_j) if c_i != c_j else 0.0
                return i + step * frac, True
            i = j

    @staticmethod
    def _parabolic_apex(
        x: np.ndarray, counts: np.ndarray, index: int, base: float, half: float
    ) -> Tuple[float, float]:
        """Weighted parabola through ln(counts - base) over the bins above half maximum."""
        lo = index
        while lo - 1 >= 0 and counts[lo - 1] > half:
            lo -= 1
        hi = index
        while hi + 1 < counts.size and counts[hi + 1] > half:
            hi += 1
        if hi - lo < 2:
            lo, hi = max(0, index - 1), min(counts.size - 1, index + 1)
        xs = x[lo:hi + 1] - x[index]
        ys = counts[lo:hi + 1] - base
        if xs.size < 3 or np.any(ys <= 0):
            return float(x[index]), float(counts[index])
        weights = ys / np.sqrt(np.maximum(counts[lo:hi + 1], 1.0))
        a, b, c = np.polyfit(xs, np.log(ys), 2, w=weights)
        if a >= 0:
            return float(x[index]), float(counts[index])
        vertex = float(np.clip(-b / (2.0 * a), xs[0], xs[-1]))
        apex = base + math.exp(c - b * b / (4.0 * a))
        return float(x[index] + vertex), float(apex)

    @staticmethod
    def _fit_undersampled(
        x: np.ndarray,
        counts: np.ndarray,
        index: int,
        left_base: int,
        right_base: int,
        base: float,
        spacing: float,
        apex: float,
    ) -> Optional[Tuple[float, float, float]]:
        """Bin-integrated Gaussian fit; FWHM reported in quadrature with the bin width."""
        lo = max(left_base, index - 5)
        hi = min(right_base, index + 5)
        xs = x[lo:hi + 1]
        ys = counts[lo:hi + 1] - base
        if xs.size < 3:
            return None
        model = _bin_integrated_gaussian(spacing)
        sigma0 = spacing / FWHM_PER_RMS
        try:
            popt, _ = curve_fit(
                model,
                xs,
                ys,
                p0=[max(apex - base, 1.0) * 1.2, x[index], sigma0],
                sigma=np.sqrt(np.maximum(counts[lo:hi + 1], 1.0)),
                maxfev=5000,
            )
        except (RuntimeError, ValueError) as e:
            logger.debug(f"Under-sampled peak fit at {x[index]:.3f} m failed: {e}")
            return None
        amplitude, centre, sigma = popt
        sigma = abs(sigma)
        if not (amplitude > 0 and xs[0] <= centre <= xs[-1] and np.isfinite(sigma)):
            return None
        fwhm = quadrature_width([FWHM_PER_RMS * sigma, spacing])
        peak = base + amplitude * spacing / (sigma * math.sqrt(2.0 * math.pi)) if sigma > 0 else apex
        return float(centre), float(fwhm), float(min(peak, apex * 10))

    @staticmethod
    def _skewness(
        x: np.ndarray,
        counts: np.ndarray,
        index: int,
        left_base: int,
        right_base: int,
        base: float,
        apex: float,
    ) -> float:
        """Sample skewness of the baseline-subtracted peak above a quarter of its height."""
        cut = base + SKEW_FRACTION * (apex - base)
        lo = index
        while lo - 1 >= max(left_base, 0) and counts[lo - 1] > cut:
            lo -= 1
        hi = index
        while hi + 1 <= min(right_base, counts.size - 1) and counts[hi + 1] > cut:
            hi += 1
        if hi - lo < 2:
            return 0.0
        w = counts[lo:hi + 1] - base
        xs = x[lo:hi + 1]
        total = w.sum()
        if total <= 0:
            return 0.0
        mean = np.sum(w * xs) / total
        m2 = np.sum(w * (xs - mean) ** 2) / total
        m3 = np.sum(w * (xs - mean) ** 3) / total
        return float(m3 / m2**1.5) if m2 > 0 else 0.0

    def two_point_resolution(self, trace: Trace, peaks: Optional[List[PeakReport]] = None) -> float:
        """FWHM of the narrowest isolated reflection peak, m."""
        if peaks is None:
            peaks = self.find_peaks(trace)
        isolated = [p for p in peaks if p.isolated]
        if not isolated:
            raise AnalysisError("no isolated reflection peak to measure the two-point resolution")
        return min(p.fwhm for p in isolated)

    def resolvable(
        self,
        trace: Trace,
        first: Union[PeakReport, float],
        second: Union[PeakReport, float],
        dip_db: Optional[float] = None,
    ) -> bool:
        """True when the trace dips at least ``dip_db`` below the lower apex between two peaks."""
        if dip_db is None:
            dip_db = self.settings.resolvable_dip_db
        z1 = first.position if isinstance(first, PeakReport) else float(first)
        z2 = second.position if isinstance(second, PeakReport) else float(second)
        i1, i2 = sorted((trace.index_of(z1), trace.index_of(z2)))
        if i2 - i1 < 2:
            return False
        levels = trace.level_db
        apex1 = levels[max(0, i1 - 1):i1 + 2].max()
        apex2 = levels[max(0, i2 - 1):i2 + 2].max()
        valley = levels[i1 + 1:i2].min()
        return bool(valley <= min(apex1, apex2) - dip_db)

    # Rayleigh region

    def fit_slope(
        self,
        trace: Trace,
        z_start: float,
        z_end: float,
        configured_attenuation: Optional[float] = None,
        background: float = 0.0,
    ) -> SlopeFit:
        """Least-squares slope of the display-dB trace over [z_start, z_end].

        The slope is reported as a positive one-way attenuation in dB/km.
        """
        if z_end <= z_start:
            raise ConfigurationError("fit window end must exceed its start")
        mask = trace.window(z_start, z_end)
        signal_counts = trace.corrected[mask] - background
        usable = signal_counts > 0
        if int(usable.sum()) < self.settings.min_fit_samples:
            raise AnalysisError(
                f"slope fit needs at least {self.settings.min_fit_samples} samples with counts "
                f"in [{z_start}, {z_end}] m, found {int(usable.sum())}"
            )
        x_km = trace.distance[mask][usable] / 1000.0
        y = display_level(signal_counts[usable], trace.offset_db)
        fit = stats.linregress(x_km, y)
        slope = -float(fit.slope)
        relative_error = None
        if configured_attenuation:
            relative_error = abs(slope - configured_attenuation) / configured_attenuation
        return SlopeFit(
            slope_db_per_km=slope,
            r_squared=float(fit.rvalue**2),
            relative_error=relative_error,
            intercept_db=float(fit.intercept),
            samples=int(usable.sum()),
            z_start=float(z_start),
            z_end=float(z_end),
        )

    def noise_region(self, trace: Trace, noise_start: Optional[float] = None) -> np.ndarray:
        """Mask of the post-fiber noise samples.

        Without ``noise_start`` the region begins after the last sample whose
        smoothed level stands clearly above the trace's final tenth.
        """
        if noise_start is not None:
            mask = trace.distance >= noise_start
        else:
            counts = trace.corrected
            window = min(SMOOTHING_BINS, max(1, counts.size // 10))
            smoothed = uniform_filter1d(counts, window, mode="nearest")
            tail = counts[-max(MIN_NOISE_SAMPLES, counts.size // 10):]
            level = float(np.median(tail))
            spread = math.sqrt(max(level, 1.0) / window)
            above = np.flatnonzero(smoothed > level + 5.0 * spread)
            start = int(above[-1]) + 2 * window if above.size else 0
            mask = np.zeros(counts.size, dtype=bool)
            mask[start:] = True
        if int(mask.sum()) < MIN_NOISE_SAMPLES:
            raise AnalysisError("no post-fiber noise region identifiable")
        return mask

    def dynamic_range(
        self,
        trace: Trace,
        fit_window: Optional[Tuple[float, float]] = None,
        noise_start: Optional[float] = None,
    ) -> Tuple[float, float]:
        """Peak dynamic range and the noise peak level, both in display dB.

        The Rayleigh fit is extrapolated to z = 0 and compared with the chosen
        percentile of the display levels of the dark-subtracted noise region.
        Bins at or below the dark level sit on the display floor, so a noise
        region with almost no counts peaks at the floor and the range grows by
        5 dB per decade of shots. Dense dark noise grows as sqrt(shots) and the
        range then gains 2.5 dB per decade.
        """
        noise = self.noise_region(trace, noise_start)
        background = float(np.mean(trace.corrected[noise]))
        if fit_window is None:
            end = float(trace.distance[np.flatnonzero(noise)[0]])
            start = float(trace.distance[0])
            fit_window = (start + 0.05 * (end - start), start + 0.9 * (end - start))
        fit = self.fit_slope(trace, fit_window[0], fit_window[1], background=background)
        residual = display_level(trace.corrected[noise] - background, trace.offset_db)
        noise_level = float(np.percentile(residual, self.settings.noise_percentile))
        value = max(fit.level_at(0.0) - noise_level, 0.0)
        logger.debug(
            f"Dynamic range {value:.2f} dB "
            f"(Rayleigh at 0: {fit.level_at(0.0):.2f} dB, noise peak {noise_level:.2f} dB)"
        )
        return value, noise_level

    def beat_length(self, trace: Trace, z_start: float, z_end: float) -> float:
        """Beat length from the dominant spatial frequency of P-OTDR fluctuations, m."""
        mask = trace.window(z_start, z_end)
        y = trace.corrected[mask]
        x = trace.distance[mask]
        if y.size < MIN_BEAT_SAMPLES or np.count_nonzero(y > 0) < MIN_BEAT_SAMPLES:
            raise AnalysisError(f"beat length needs at least {MIN_BEAT_SAMPLES} samples in the window")
        positive = y > 0
        trend_fit = stats.linregress(x[positive], np.log(y[positive]))
        trend = np.exp(trend_fit.intercept + trend_fit.slope * x)
        fluctuation = y / trend
        fluctuation = fluctuation - fluctuation.mean()
        power = np.abs(np.fft.rfft(fluctuation * signal.windows.hann(y.size))) ** 2
        freqs = np.fft.rfftfreq(y.size, d=trace.spacing)
        if power.size < 5:
            raise BeatLengthNotDetected()
        k = int(np.argmax(power[2:])) + 2
        threshold = self.settings.beat_peak_ratio * float(np.median(power[2:])) * math.log2(y.size)
        if power[k] < threshold:
            raise BeatLengthNotDetected()
        shift = 0.0
        if 0 < k < power.size - 1:
            left, centre, right = power[k - 1], power[k], power[k + 1]
            denominator = left - 2.0 * centre + right
            if denominator != 0:
                shift = float(np.clip(0.5 * (left - right) / denominator, -0.5, 0.5))
        frequency = (k + shift) * (freqs[1] - freqs[0])
        return 2.0 / frequency

    # Reports

    def analyze(
        self,
        histogram: Histogram,
        scenario: Optional[Scenario] = None,
        fit_window: Optional[Tuple[float, float]] = None,
        beat_window: Optional[Tuple[float, float]] = None,
        noise_start: Optional[float] = None,
        min_prominence: Optional[float] = None,
        air_regions: Optional[Sequence[Tuple[float, float]]] = None,
        ctx: Optional[GroupIndexContext] = None,
    ) -> AnalysisReport:
        """Every figure of merit available for this histogram.

        Figures asked for explicitly raise on failure; the others become warnings.
        """
        hints = scenario.analysis if scenario is not None else None
        explicit_fit = fit_window is not None
        explicit_beat = beat_window is not None
        explicit_noise = noise_start is not None
        if hints is not None:
            fit_window = fit_window or hints.fit_window
            beat_window = beat_window or hints.beat_window
            noise_start = noise_start if noise_start is not None else hints.noise_start
            min_prominence = min_prominence or hints.min_prominence

        if ctx is None:
            ctx = display_context(scenario.link) if scenario is not None else DEFAULT_CONTEXT
        if air_regions is None:
            air_regions = scenario_air_regions(scenario) if scenario is not None else ()

        trace = self.to_trace(histogram, ctx, air_regions=air_regions)
        report = AnalysisReport()
        report.peaks = self.find_peaks(trace, min_prominence)

        if report.peaks:
            try:
                report.two_point_resolution = self.two_point_resolution(trace, report.peaks)
            except AnalysisError as e:
                report.warnings.append(str(e))
            if len(report.peaks) >= 2:
                first, second = sorted(
                    sorted(report.peaks, key=lambda p: p.prominence_db, reverse=True)[:2],
                    key=lambda p: p.position,
                )
                report.peak_separation = second.position - first.position
                if self._inside_air(trace, first, second):
                    report.air_separation = report.peak_separation * trace.ctx.n_g

        if fit_window is not None:
            alpha = configured_attenuation(scenario, fit_window) if scenario is not None else None
            background = 0.0
            try:
                noise = self.noise_region(trace, noise_start)
                background = float(np.mean(trace.corrected[noise]))
            except AnalysisError as e:
                if explicit_noise:
                    raise
                report.warnings.append(f"slope fit without background subtraction: {e}")
            report.slope = self._guarded(
                lambda: self.fit_slope(trace, fit_window[0], fit_window[1], alpha, background),
                "slope",
                explicit_fit,
                report,
            )
            dr = self._guarded(
                lambda: self.dynamic_range(trace, fit_window, noise_start),
                "dynamic_range",
                explicit_noise,
                report,
            )
            if dr is not None:
                report.dynamic_range, report.noise_floor = dr

        if beat_window is not None:
            report.beat_length = self._guarded(
                lambda: self.beat_length(trace, beat_window[0], beat_window[1]),
                "beat_length",
                explicit_beat,
                report,
            )
        return report

    @staticmethod
    def _guarded(compute, name: str, explicit: bool, report: AnalysisReport):
        try:
            return compute()
        except AnalysisError as e:
            monitoring.analysis_failures.labels(error_type=type(e).__name__).inc()
            if explicit:
                raise
            report.warnings.append(f"{name}: {e}")
            logger.warning(f"{name} not available: {e}")
            return None

    @staticmethod
    def _inside_air(trace: Trace, first: PeakReport, second: PeakReport) -> bool:
        for start, end in trace.air_regions:
            pad = max(first.fwhm, second.fwhm, 5.0 * trace.spacing)
            if start - pad <= first.position and second.position <= end + pad:
                return True
        return False


def configured_attenuation(scenario: Scenario, window: Tuple[float, float]) -> Optional[float]:
    """Attenuation of the fiber segment holding the middle of ``window``."""
    middle = 0.5 * (window[0] + window[1])
    z = 0.0
    for element in scenario.link.elements:
        length = getattr(element, "length", 0.0)
        if isinstance(element, FiberSegment) and z <= middle <= z + element.length:
            return element.attenuation
        z += length
    return None


def _measure_separation(
    scenario: Scenario,
    repeat: int,
    seed: int,
    analyzer: TraceAnalyzer,
) -> float:
    """One accuracy repeat: simulate, find the two most prominent peaks, return their distance."""
    histogram = simulate_scenario(scenario, seed=seed, threads=1, service=DetectionService())
    trace = analyzer.to_trace(histogram, display_context(scenario.link))
    peaks = analyzer.find_peaks(trace, scenario.analysis.min_prominence)
    if len(peaks) < 2:
        raise AnalysisError(f"repeat {repeat} (seed {seed}): fewer than two peaks found")
    first, second = sorted(
        sorted(peaks, key=lambda p: p.prominence_db, reverse=True)[:2],
        key=lambda p: p.position,
    )
    if not analyzer.resolvable(trace, first, second):
        raise AnalysisError(f"repeat {repeat} (seed {seed}): peaks are not resolvable")
    logger.debug(f"Repeat {repeat} (seed {seed}): separation {second.position - first.position:.6f} m")
    return second.position - first.position


def accuracy_experiment(
    scenario: Scenario,
    n: int,
    seed: Optional[int] = None,
    seeds: Optional[Sequence[int]] = None,
    threads: Optional[int] = None,
    analyzer: Optional[TraceAnalyzer] = None,
) -> AccuracyResult:
    """Repeat the measurement ``n`` times with derived seeds and report mean and spread.

    ``seeds`` forces the per-repeat seeds instead of deriving them.
    """
    if n < 2:
        raise ConfigurationError("accuracy experiment needs at least 2 repeats")
    if seed is None:
        seed = scenario.seed
    if seeds is None:
        seeds = [derived_seed(seed, i) for i in range(n)]
    elif len(seeds) != n:
        raise ConfigurationError(f"expected {n} seeds, got {len(seeds)}")
    analyzer = analyzer or TraceAnalyzer()
    threads = threads or settings.simulation.threads
    logger.info(f"Accuracy experiment: {n} repeats of {scenario.name or 'scenario'}")
    distances = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_measure_separation)(scenario, i, s, analyzer) for i, s in enumerate(seeds)
    )
    values = np.asarray(distances, dtype=float)
    return AccuracyResult(
        mean=float(values.mean()),
        std=float(values.std(ddof=1)),
        n=n,
        distances=tuple(float(v) for v in values),
        seeds=tuple(int(s) for s in seeds),
    )
