"""Scenario files: loading, saving, validation and derived quantities."""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from psiotdr.errors import ConfigurationError, Diagnostic
from psiotdr.models.detection_models import Histogram
from psiotdr.models.link_models import LinkPlan
from psiotdr.models.scenario_models import Scenario
from psiotdr.models.scenario_schema import (
    canonical_json,
    document_from_data,
    scenario_from_document,
    scenario_hash,
)
from psiotdr.services.detection_service import (
    PILEUP_WARNING_PROBABILITY,
    DetectionService,
    build_profile,
    expected_histogram,
    nep,
    per_shot_stop_probability,
    start_channel,
)
from psiotdr.services.link_service import compile_plan, max_repetition_rate
from psiotdr.services.photonics_service import dispersion_added_width
from psiotdr.utils.units import (
    DEFAULT_CONTEXT,
    FWHM_PER_RMS,
    GroupIndexContext,
    quadrature_width,
    time_to_distance,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """Parse scenario JSON text; syntax errors are reported with their line."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(Diagnostic(f"{source}:{e.lineno}:{e.colno}", e.msg)) from e
    return scenario_from_document(document_from_data(data))


def load_scenario(path: PathLike) -> Scenario:
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(Diagnostic(str(path), f"cannot read scenario file: {e.strerror or e}")) from e
    scenario = parse_scenario(text, str(path))
    logger.info(
        f"Loaded scenario {scenario.name or path.name} "
        f"({scenario.mode.value}, {len(scenario.link.elements)} elements)"
    )
    return scenario


def dump_scenario(scenario: Scenario) -> str:
    """Canonical scenario JSON text, newline terminated."""
    return canonical_json(scenario) + "\n"


def save_scenario(scenario: Scenario, path: PathLike) -> Path:
    from psiotdr.services.export_service import atomic_write_text

    return atomic_write_text(path, dump_scenario(scenario))


def display_context(link: LinkPlan) -> GroupIndexContext:
    """Single group index used on the distance axis: the first fiber's."""
    segments = link.segments
    return GroupIndexContext(segments[0].n_g) if segments else DEFAULT_CONTEXT


def air_regions(scenario: Scenario) -> Tuple[Tuple[float, float], ...]:
    """Air gaps as displayed one-way distance spans."""
    ctx = display_context(scenario.link)
    ir = compile_plan(scenario.link, scenario.source.fwhm)
    return tuple((time_to_distance(t0, ctx), time_to_distance(t1, ctx)) for t0, t1 in ir.air_spans)


def simulate_scenario(
    scenario: Scenario,
    seed: Optional[int] = None,
    shots: Optional[int] = None,
    threads: Optional[int] = None,
    service: Optional[DetectionService] = None,
) -> Histogram:
    """Run the Monte Carlo for ``scenario``; ``seed`` and ``shots`` override the file."""
    service = service or DetectionService()
    return service.simulate(
        scenario.link,
        scenario.source,
        scenario.stop_detector,
        scenario.tac,
        shots=scenario.shots_to_run if shots is None else shots,
        seed=scenario.seed if seed is None else seed,
        start_detector=scenario.start_detector,
        scrambler=scenario.scrambler,
        dispersion_model=scenario.dispersion_model,
        repetition_rate=scenario.repetition_rate,
        guard=scenario.guard,
        threads=threads,
        scenario_hash=scenario_hash(scenario),
    )


def expected_scenario_histogram(scenario: Scenario, starts: Optional[float] = None) -> np.ndarray:
    """Analytic first-stop counts per bin for ``starts`` TAC starts (default: expected starts)."""
    if starts is None:
        start = start_channel(scenario.tac, scenario.source, scenario.start_detector)
        starts = scenario.shots_to_run * start.probability
    return expected_histogram(
        scenario.link,
        scenario.source,
        scenario.stop_detector,
        scenario.tac,
        starts,
        start_detector=scenario.start_detector,
        scrambler=scenario.scrambler,
        dispersion_model=scenario.dispersion_model,
    )


def system_response_fwhm(scenario: Scenario) -> float:
    """Gaussian FWHM of pulse, stop jitter and start channel combined, s."""
    start = start_channel(scenario.tac, scenario.source, scenario.start_detector)
    return quadrature_width(
        [scenario.source.fwhm, scenario.stop_detector.jitter_fwhm, FWHM_PER_RMS * start.sigma]
    )


@dataclass
class ValidationReport:
    """Outcome of validating one scenario file."""
    scenario: Scenario
    quantities: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def lines(self) -> List[str]:
        """Human-readable summary, one quantity per line."""
        out = [f"ok: {self.scenario.name or 'scenario'}"]
        for key, value in self.quantities.items():
            out.append(f"{key}: {value:.6g}" if isinstance(value, float) else f"{key}: {value}")
        out.extend(f"warning: {w}" for w in self.warnings)
        return out


def derived_quantities(scenario: Scenario) -> ValidationReport:
    """Round trip, repetition rate, stop probability, pile-up, NEP and system width of a scenario."""
    report = ValidationReport(scenario=scenario)
    ctx = display_context(scenario.link)
    profile = build_profile(
        scenario.link,
        scenario.source,
        scenario.stop_detector,
        scenario.scrambler,
        scenario.dispersion_model,
    )
    stop_probability = per_shot_stop_probability(profile, scenario.tac)
    window_mean = -math.log1p(-stop_probability) if stop_probability < 1 else math.inf
    system_fwhm = system_response_fwhm(scenario)
    limit = max_repetition_rate(scenario.link, scenario.guard)

    report.quantities = {
        "round_trip_time_s": scenario.link.round_trip_time,
        "max_repetition_rate_hz": limit,
        "repetition_rate_hz": scenario.effective_repetition_rate,
        "shots": scenario.shots_to_run,
        "histogram_bins": scenario.tac.bins,
        "stop_probability_per_shot": stop_probability,
        "late_return_suppression": math.exp(-window_mean),
        "nep_w_per_sqrt_hz": nep(scenario.stop_detector, scenario.source.wavelength),
        "system_fwhm_s": system_fwhm,
        "system_fwhm_m": time_to_distance(system_fwhm, ctx),
    }

    if scenario.repetition_rate is not None and scenario.repetition_rate > limit * (1.0 + 1e-12):
        raise ConfigurationError(
            Diagnostic(
                "repetition_rate_hz",
                f"{scenario.repetition_rate:.6g} Hz exceeds the maximum {limit:.6g} Hz for this link",
            )
        )
    if stop_probability > PILEUP_WARNING_PROBABILITY:
        report.warnings.append(
            f"per-shot stop probability {stop_probability:.3f} exceeds {PILEUP_WARNING_PROBABILITY}: "
            f"first-stop pile-up suppresses returns at the end of the range by a factor "
            f"{math.exp(-window_mean):.3f}, distorting peak ratios"
        )
    report.warnings.extend(dispersion_warnings(scenario, system_fwhm))
    for warning in report.warnings:
        logger.warning(warning)
    return report


def dispersion_warnings(scenario: Scenario, system_fwhm: Optional[float] = None) -> List[str]:
    """Warn at every reflection where dispersion broadening exceeds the undispersed system width."""
    if system_fwhm is None:
        system_fwhm = system_response_fwhm(scenario)
    ir = compile_plan(scenario.link, scenario.source.fwhm)
    warnings = []
    for reflection in ir.reflections:
        added = dispersion_added_width(scenario.source, scenario.link, reflection.z, scenario.dispersion_model)
        if added > system_fwhm:
            warnings.append(
                f"dispersion-limited regime at {reflection.z:.3f} m ({reflection.label}): broadening "
                f"{added * 1e12:.1f} ps exceeds the system response {system_fwhm * 1e12:.1f} ps"
            )
    return warnings


def validate_scenario(path: PathLike) -> ValidationReport:
    """Full validation of a scenario file plus its derived quantities."""
    return derived_quantities(load_scenario(path))


def validate_scenario_data(data: Any) -> ValidationReport:
    """Same as :func:`validate_scenario` for an already parsed document."""
    return derived_quantities(scenario_from_document(document_from_data(data)))

