"""Photon-counting detector model, TCSPC Monte Carlo engine and its analytic oracle."""
import logging
import math
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.integrate import cumulative_trapezoid
from scipy.ndimage import gaussian_filter1d
from scipy.special import ndtr
from tqdm import tqdm

from psiotdr import monitoring
from psiotdr.config import SimulationSettings, settings
from psiotdr.errors import ConfigurationError
from psiotdr.models.detection_models import DetectorModel, Histogram, TacConfig, TacMode
from psiotdr.models.link_models import ImpulseResponse, LinkPlan
from psiotdr.models.photonics_models import DispersionModel, PulseSource
from psiotdr.services.link_service import compile_plan, max_repetition_rate
from psiotdr.services.photonics_service import dispersion_fwhm_profile, polarization_factors
from psiotdr.utils.rng import STREAM_SHOTS, block_generator
from psiotdr.utils.units import fwhm_to_rms, photon_energy, quadrature_width

logger = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-15  # s
WINDOW_SIGMAS = 8.0
DARK_WINDOW_SIGMAS = 6.0
PILEUP_WARNING_PROBABILITY = 0.05


def nep(det: DetectorModel, wavelength: float) -> float:
    """Noise-equivalent power in W/sqrt(Hz): (h nu / eta) sqrt(2 D)."""
    return photon_energy(wavelength) / det.efficiency * math.sqrt(2.0 * det.dark_rate)


def launched_photons(source: PulseSource) -> float:
    """Mean photon number of one pulse after the tap coupler."""
    return source.pulse_energy * (1.0 - source.tap_fraction) / photon_energy(source.wavelength)


def tapped_photons(source: PulseSource) -> float:
    """Mean photon number sent to the start detector."""
    return source.pulse_energy * source.tap_fraction / photon_energy(source.wavelength)


@dataclass(frozen=True)
class StartChannel:
    """Timing of the TAC start: probability per shot, delay and rms jitter."""
    probability: float
    delay: float
    sigma: float


def start_channel(
    tac: TacConfig,
    source: PulseSource,
    start_detector: Optional[DetectorModel] = None,
) -> StartChannel:
    """Derive the start channel of configuration 1 or 2.

    Configuration 1 fires only when the start detector sees a tapped photon;
    configuration 2 always fires, with the driver's trigger jitter.
    """
    extra = fwhm_to_rms(tac.extra_jitter_fwhm)
    if tac.mode is TacMode.CONFIGURATION_1:
        if start_detector is None:
            raise ConfigurationError("configuration_1 requires a start detector")
        probability = -math.expm1(-start_detector.efficiency * tapped_photons(source))
        base = fwhm_to_rms(start_detector.jitter_fwhm)
    else:
        probability = 1.0
        base = source.trigger_jitter_rms
    return StartChannel(probability=probability, delay=tac.start_delay, sigma=quadrature_width([base, extra]))


@dataclass(frozen=True)
class ReturnProfile:
    """Expected detected photons per shot, split into Gaussian-blurred components.

    Component j covers round-trip times [t0, t0 + span) with an exponential
    profile of decay ``decay`` (1/s), holds ``weight`` expected detections and
    is blurred by ``sigma``. Reflections have zero span.
    """
    t0: np.ndarray
    span: np.ndarray
    decay: np.ndarray
    weight: np.ndarray
    sigma: np.ndarray
    is_reflection: np.ndarray
    dark_rate: float

    @property
    def mean_signal(self) -> float:
        return float(self.weight.sum())

    def sample_times(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Arrival times of ``count`` detected signal photons."""
        if count == 0:
            return np.empty(0)
        total = self.weight.sum()
        component = rng.choice(self.weight.size, size=count, p=self.weight / total)
        u = rng.random(count)
        blur = rng.standard_normal(count)
        span = self.span[component]
        decay = self.decay[component]
        kd = decay * span
        steep = kd > 1e-9
        offset = u * span
        offset[steep] = -np.log1p(u[steep] * np.expm1(-kd[steep])) / decay[steep]
        return self.t0[component] + offset + self.sigma[component] * blur

    def rate(self, t: np.ndarray, extra_sigma: float = 0.0) -> np.ndarray:
        """Detection rate (Hz) at times ``t``, dark counts included."""
        t = np.asarray(t, dtype=float)
        order = np.argsort(t, kind="stable")
        ts = t[order]
        out = np.full(ts.shape, self.dark_rate, dtype=float)
        sigmas = np.sqrt(self.sigma**2 + extra_sigma**2)
        sigmas = np.maximum(sigmas, SIGMA_FLOOR)
        for j in range(self.weight.size):
            if self.weight[j] <= 0:
                continue
            sigma = sigmas[j]
            t0 = self.t0[j]
            t1 = t0 + self.span[j]
            lo = np.searchsorted(ts, t0 - WINDOW_SIGMAS * sigma)
            hi = np.searchsorted(ts, t1 + WINDOW_SIGMAS * sigma)
            if hi <= lo:
                continue
            x = ts[lo:hi]
            if self.is_reflection[j]:
                out[lo:hi] += self.weight[j] * np.exp(-0.5 * ((x - t0) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
                continue
            k = self.decay[j]
            a0 = self._rate0(j)
            shift = k * sigma**2
            window = ndtr((x - t0 - shift) / sigma) - ndtr((x - t1 - shift) / sigma)
            out[lo:hi] += a0 * np.exp(-k * (x - t0) + 0.5 * k * shift) * window
        result = np.empty_like(out)
        result[order] = out
        return result

    def _rate0(self, j: int) -> float:
        span = self.span[j]
        k = self.decay[j]
        if k * span > 1e-9:
            return self.weight[j] * k / -math.expm1(-k * span)
        return self.weight[j] / span

    def expected_in_window(self, w0: float, w1: float) -> float:
        """Expected detections (signal and dark) between ``w0`` and ``w1``, blur ignored for pieces."""
        total = self.dark_rate * (w1 - w0)
        for j in range(self.weight.size):
            t0 = self.t0[j]
            if self.is_reflection[j]:
                sigma = max(self.sigma[j], SIGMA_FLOOR)
                total += self.weight[j] * (ndtr((w1 - t0) / sigma) - ndtr((w0 - t0) / sigma))
                continue
            a = max(w0, t0)
            b = min(w1, t0 + self.span[j])
            if b <= a:
                continue
            k = self.decay[j]
            a0 = self._rate0(j)
            if k * self.span[j] > 1e-9:
                total += a0 / k * (math.exp(-k * (a - t0)) - math.exp(-k * (b - t0)))
            else:
                total += a0 * (b - a)
        return total


def build_profile(
    plan: LinkPlan,
    source: PulseSource,
    det: DetectorModel,
    scrambler: bool = True,
    dispersion_model: DispersionModel = DispersionModel.SOURCE_LINEWIDTH,
    ir: Optional[ImpulseResponse] = None,
) -> ReturnProfile:
    """Turn a compiled link into detected-photon components for one detector."""
    if ir is None:
        ir = compile_plan(plan, source.fwhm)
    photons = launched_photons(source) * det.efficiency
    stop_sigma = fwhm_to_rms(det.jitter_fwhm)

    refl_z = np.array([r.z for r in ir.reflections], dtype=float)
    refl_t = np.array([r.time for r in ir.reflections], dtype=float)
    refl_f = np.array([r.returned_fraction for r in ir.reflections], dtype=float)
    piece_z = np.array([p.z_mid for p in ir.rayleigh], dtype=float)
    piece_t0 = np.array([p.t0 for p in ir.rayleigh], dtype=float)
    piece_span = np.array([p.t1 - p.t0 for p in ir.rayleigh], dtype=float)
    piece_decay = np.array([p.decay_rate for p in ir.rayleigh], dtype=float)
    piece_f = np.array([p.total_fraction for p in ir.rayleigh], dtype=float)

    z_all = np.concatenate([refl_z, piece_z])
    pol = polarization_factors(plan, z_all, source.polarization, det.polarization_analyzer, scrambler)
    pulse_fwhm = dispersion_fwhm_profile(source, plan, z_all, dispersion_model)
    sigma = np.sqrt((pulse_fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))) ** 2 + stop_sigma**2)

    n_refl = refl_z.size
    return ReturnProfile(
        t0=np.concatenate([refl_t, piece_t0]),
        span=np.concatenate([np.zeros(n_refl), piece_span]),
        decay=np.concatenate([np.zeros(n_refl), piece_decay]),
        weight=np.concatenate([refl_f, piece_f]) * photons * pol,
        sigma=sigma,
        is_reflection=np.concatenate([np.ones(n_refl, dtype=bool), np.zeros(piece_z.size, dtype=bool)]),
        dark_rate=det.dark_rate,
    )


class ExpectedRate:
    """Instantaneous stop-click rate r(t) after one launch at t = 0."""

    def __init__(self, profile: ReturnProfile, start_jitter_rms: float = 0.0):
        self.profile = profile
        self.start_jitter_rms = start_jitter_rms

    def __call__(self, t) -> np.ndarray:
        return self.profile.rate(np.atleast_1d(np.asarray(t, dtype=float)), self.start_jitter_rms)

    @property
    def dark_rate(self) -> float:
        return self.profile.dark_rate


def expected_rate(
    ir: ImpulseResponse,
    source: PulseSource,
    det: DetectorModel,
    plan: LinkPlan,
    scrambler: bool = True,
    start_jitter_rms: float = 0.0,
    dispersion_model: DispersionModel = DispersionModel.SOURCE_LINEWIDTH,
) -> ExpectedRate:
    """r(t) = eta * photon flux (blurred by the system response) + dark rate."""
    profile = build_profile(plan, source, det, scrambler, dispersion_model, ir=ir)
    return ExpectedRate(profile, start_jitter_rms)


def first_stop_distribution(
    rate,
    range_s: float,
    step: float,
    start: float = 0.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """First-stop density p(t) = r(t) exp(-int_0^t r) on a grid over [start, start + range_s).

    Returns grid times (relative to ``start``) and densities.
    """
    count = max(1, int(math.ceil(range_s / step)))
    tau = (np.arange(count) + 0.5) * step
    r = np.asarray(rate(start + tau), dtype=float)
    grid = np.concatenate([[0.0], tau])
    integral = cumulative_trapezoid(np.concatenate([[r[0]], r]), grid, initial=0.0)[1:]
    return tau, r * np.exp(-integral)


def expected_histogram(
    plan: LinkPlan,
    source: PulseSource,
    det: DetectorModel,
    tac: TacConfig,
    shots: float,
    start_detector: Optional[DetectorModel] = None,
    scrambler: bool = True,
    dispersion_model: DispersionModel = DispersionModel.SOURCE_LINEWIDTH,
    subsamples: int = 8,
) -> np.ndarray:
    """Expected first-stop counts per bin for ``shots`` TAC starts.

    The first-stop density is computed with stop-side blur only and then
    convolved with the start-channel jitter. Dead time is neglected.
    """
    profile = build_profile(plan, source, det, scrambler, dispersion_model)
    start = start_channel(tac, source, start_detector)
    finest = float(profile.sigma.min()) if profile.sigma.size else tac.bin_width
    subsamples = int(min(64, max(subsamples, math.ceil(3.0 * tac.bin_width / max(finest, SIGMA_FLOOR)))))
    step = tac.bin_width / subsamples
    pad = int(math.ceil(WINDOW_SIGMAS * start.sigma / step))
    n_core = tac.bins * subsamples

    tau = (np.arange(-pad, n_core + pad) + 0.5) * step
    r = profile.rate(start.delay + tau)
    integral = cumulative_trapezoid(r, tau, initial=0.0)
    integral -= np.interp(0.0, tau, integral)
    density = r * np.exp(-np.maximum(integral, 0.0))
    if start.sigma / step > 0.1:
        density = gaussian_filter1d(density, start.sigma / step, mode="constant", truncate=WINDOW_SIGMAS)
    core = density[pad:pad + n_core].reshape(tac.bins, subsamples)
    return shots * core.sum(axis=1) * step


def pool_bins(counts: np.ndarray, expected: np.ndarray, min_expected: float) -> Tuple[np.ndarray, np.ndarray]:
    """Merge runs of adjacent bins until each pool expects at least ``min_expected`` counts.

    A short remainder at the end joins the last pool.
    """
    starts = []
    start = 0
    accumulated = 0.0
    for i, value in enumerate(expected):
        accumulated += value
        if accumulated >= min_expected:
            starts.append(start)
            start = i + 1
            accumulated = 0.0
    if not starts:
        return np.array([counts.sum()]), np.array([expected.sum()])
    return np.add.reduceat(counts, starts), np.add.reduceat(expected, starts)


def chi_square(
    counts: np.ndarray,
    expected: np.ndarray,
    min_expected: float = 10.0,
    pool: bool = False,
) -> Tuple[float, int]:
    """Pearson chi-square over bins with expectation >= ``min_expected``.

    With ``pool`` sparse bins are merged with their neighbours first instead
    of being dropped. Returns (chi2, degrees of freedom).
    """
    counts = np.asarray(counts, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if pool:
        counts, expected = pool_bins(counts, expected, min_expected)
    used = expected >= min_expected
    dof = int(used.sum())
    if dof == 0:
        return 0.0, 0
    return float(np.sum((counts[used] - expected[used]) ** 2 / expected[used])), dof


def per_shot_stop_probability(profile: ReturnProfile, tac: TacConfig) -> float:
    """Probability that a started shot records a stop inside the TAC range."""
    mean = profile.expected_in_window(tac.start_delay, tac.start_delay + tac.range)
    return -math.expm1(-mean)


@dataclass
class _ChunkResult:
    counts: np.ndarray
    starts: int
    darks: int


class DetectionService:
    """Runs the seeded first-stop TCSPC Monte Carlo."""

    def __init__(self, simulation_settings: Optional[SimulationSettings] = None):
        self.settings = simulation_settings or settings.simulation

    def simulate(
        self,
        plan: LinkPlan,
        source: PulseSource,
        det: DetectorModel,
        tac: TacConfig,
        shots: int,
        seed: int,
        start_detector: Optional[DetectorModel] = None,
        scrambler: bool = True,
        dispersion_model: DispersionModel = DispersionModel.SOURCE_LINEWIDTH,
        repetition_rate: Optional[float] = None,
        guard: Optional[float] = None,
        threads: Optional[int] = None,
        scenario_hash: str = "",
    ) -> Histogram:
        """Fire ``shots`` laser pulses and histogram the first stop after each start.

        Identical inputs, seed and shot count give an identical histogram for
        any thread count and chunk size.
        """
        self._check(plan, tac, shots, repetition_rate, guard)
        threads = threads or self.settings.threads
        if threads < 1:
            raise ConfigurationError("threads must be ≥ 1")

        profile = build_profile(plan, source, det, scrambler, dispersion_model)
        start = start_channel(tac, source, start_detector)
        stop_probability = per_shot_stop_probability(profile, tac)
        if stop_probability > PILEUP_WARNING_PROBABILITY:
            logger.warning(
                f"Per-shot stop probability {stop_probability:.3f} exceeds {PILEUP_WARNING_PROBABILITY}: "
                f"first-stop pile-up distorts late returns"
            )

        blocks_per_chunk = max(1, int(round(self.settings.chunk_shots / STREAM_SHOTS)))
        chunk = blocks_per_chunk * STREAM_SHOTS
        sizes = [min(chunk, shots - i * chunk) for i in range(int(math.ceil(shots / chunk)))]
        logger.info(
            f"Simulating {shots} shots in {len(sizes)} chunks on {threads} thread(s), "
            f"{profile.mean_signal:.4g} detected photons per shot, start probability {start.probability:.4g}"
        )
        began = time.perf_counter()
        results = Parallel(n_jobs=threads, prefer="threads")(
            delayed(self._simulate_chunk)(profile, det, tac, start, index * blocks_per_chunk, size, seed)
            for index, size in tqdm(
                enumerate(sizes),
                total=len(sizes),
                desc="shots",
                unit="chunk",
                disable=not self.settings.progress,
            )
        )

        counts = np.zeros(tac.bins, dtype=np.int64)
        starts = 0
        darks = 0
        for result in results:
            counts += result.counts
            starts += result.starts
            darks += result.darks
        elapsed = time.perf_counter() - began

        monitoring.shots_simulated.inc(shots)
        monitoring.starts_recorded.inc(starts)
        monitoring.stops_recorded.inc(int(counts.sum()))
        monitoring.dark_events.inc(darks)
        monitoring.simulation_runs.labels(mode=tac.mode.value).inc()
        monitoring.simulation_duration.observe(elapsed)
        logger.info(
            f"Simulation finished: {starts} starts, {int(counts.sum())} stops in {elapsed:.2f} s "
            f"({shots / max(elapsed, 1e-9):.3g} shots/s)"
        )
        return Histogram(
            bin_width=tac.bin_width,
            origin=tac.origin,
            counts=counts,
            shots=starts,
            seed=seed,
            scenario_hash=scenario_hash,
            metadata={"laser_shots": shots, "dark_events": darks},
        )

    def _check(
        self,
        plan: LinkPlan,
        tac: TacConfig,
        shots: int,
        repetition_rate: Optional[float],
        guard: Optional[float],
    ) -> None:
        problems = []
        if shots < 1:
            problems.append("shots must be ≥ 1")
        if tac.bins > self.settings.max_bins:
            problems.append(f"histogram of {tac.bins} bins exceeds the {self.settings.max_bins}-bin memory guard")
        if repetition_rate is not None:
            limit = max_repetition_rate(plan, guard)
            if repetition_rate > limit * (1.0 + 1e-12):
                problems.append(
                    f"repetition rate {repetition_rate:.6g} Hz exceeds the maximum {limit:.6g} Hz "
                    f"for this link (round trip plus guard)"
                )
            elif tac.start_delay + tac.range > 1.0 / repetition_rate:
                logger.warning("TAC window extends past the next laser pulse")
        if problems:
            raise ConfigurationError(problems)

    @staticmethod
    def _simulate_chunk(
        profile: ReturnProfile,
        det: DetectorModel,
        tac: TacConfig,
        start: StartChannel,
        first_block: int,
        size: int,
        seed: int,
    ) -> _ChunkResult:
        counts = np.zeros(tac.bins, dtype=np.int64)
        starts = 0
        darks = 0
        for offset in range(0, size, STREAM_SHOTS):
            block = first_block + offset // STREAM_SHOTS
            started, dark = DetectionService._simulate_block(
                profile, det, tac, start, block_generator(seed, block), min(STREAM_SHOTS, size - offset), counts
            )
            starts += started
            darks += dark
        logger.debug(f"Chunk from block {first_block}: {starts} starts, {int(counts.sum())} stops")
        return _ChunkResult(counts, starts, darks)

    @staticmethod
    def _simulate_block(
        profile: ReturnProfile,
        det: DetectorModel,
        tac: TacConfig,
        start: StartChannel,
        rng: np.random.Generator,
        size: int,
        counts: np.ndarray,
    ) -> Tuple[int, int]:
        """Add one block's first stops to ``counts``; return (starts, dark events)."""
        if start.probability < 1.0:
            started = int(np.count_nonzero(rng.random(size) < start.probability))
        else:
            started = size
        if started == 0:
            return 0, 0

        start_times = start.delay + start.sigma * rng.standard_normal(started)

        n_signal = rng.poisson(profile.mean_signal, started) if profile.mean_signal > 0 else np.zeros(started, np.int64)
        signal_shot = np.repeat(np.arange(started), n_signal)
        signal_time = profile.sample_times(rng, int(n_signal.sum()))

        w0 = start.delay - DARK_WINDOW_SIGMAS * start.sigma - det.dead_time
        w1 = start.delay + tac.range + DARK_WINDOW_SIGMAS * start.sigma
        n_dark = rng.poisson(det.dark_rate * (w1 - w0), started) if det.dark_rate > 0 else np.zeros(started, np.int64)
        dark_shot = np.repeat(np.arange(started), n_dark)
        dark_time = rng.uniform(w0, w1, int(n_dark.sum()))

        shot = np.concatenate([signal_shot, dark_shot])
        arrival = np.concatenate([signal_time, dark_time])
        if shot.size == 0:
            return started, 0
        order = np.lexsort((arrival, shot))
        shot = shot[order]
        arrival = arrival[order]

        accepted = _apply_dead_time(shot, arrival, det.dead_time, started)
        delay = arrival - start_times[shot]
        valid = accepted & (delay >= 0.0) & (delay < tac.range)
        if np.any(valid):
            _, first = np.unique(shot[valid], return_index=True)
            bins = np.minimum((delay[valid][first] / tac.bin_width).astype(np.int64), tac.bins - 1)
            counts += np.bincount(bins, minlength=tac.bins)
        return started, int(n_dark.sum())


def _apply_dead_time(shot: np.ndarray, arrival: np.ndarray, dead_time: float, shots: int) -> np.ndarray:
    """Non-paralyzable dead time on events sorted by (shot, time)."""
    n = shot.size
    accepted = np.ones(n, dtype=bool)
    if dead_time <= 0 or n < 2:
        return accepted
    first = np.empty(n, dtype=bool)
    first[0] = True
    first[1:] = shot[1:] != shot[:-1]
    group_start = np.flatnonzero(first)
    rank = np.arange(n) - group_start[np.cumsum(first) - 1]

    by_rank = np.argsort(rank, kind="stable")
    edges = np.searchsorted(rank[by_rank], np.arange(rank.max() + 2))
    last = np.full(shots, -np.inf)
    for r in range(rank.max() + 1):
        idx = by_rank[edges[r]:edges[r + 1]]
        owner = shot[idx]
        ok = arrival[idx] - last[owner] >= dead_time
        accepted[idx] = ok
        last[owner[ok]] = arrival[idx[ok]]
    return accepted
