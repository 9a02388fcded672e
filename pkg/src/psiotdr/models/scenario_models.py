"""Scenario: one complete experiment (link, source, detectors, TAC, run length)."""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from psiotdr.config import DEFAULT_GUARD_S
from psiotdr.errors import ConfigurationError, Diagnostic
from psiotdr.models.detection_models import DetectorModel, TacConfig, TacMode
from psiotdr.models.link_models import LinkPlan
from psiotdr.models.photonics_models import DispersionModel, PulseSource

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class AnalysisHints:
    """Default analysis windows shipped with a scenario, in displayed metres."""
    fit_window: Optional[Tuple[float, float]] = None
    beat_window: Optional[Tuple[float, float]] = None
    noise_start: Optional[float] = None
    min_prominence: Optional[float] = None


@dataclass(frozen=True)
class Scenario:
    """Complete experiment description.

    Configuration 1 takes its start from ``start_detector`` on the tap;
    configuration 2 from the laser trigger. Exactly one of ``shots`` and
    ``duration`` is set; with a duration the shot count follows from the
    repetition rate.
    """
    link: LinkPlan
    source: PulseSource
    stop_detector: DetectorModel
    tac: TacConfig
    start_detector: Optional[DetectorModel] = None
    scrambler: bool = True
    shots: Optional[int] = None
    duration: Optional[float] = None
    seed: int = 0
    name: str = ""
    description: str = ""
    dispersion_model: DispersionModel = DispersionModel.SOURCE_LINEWIDTH
    repetition_rate: Optional[float] = None
    guard: float = DEFAULT_GUARD_S
    calibrated: Tuple[str, ...] = ()
    analysis: AnalysisHints = field(default_factory=AnalysisHints)

    def __post_init__(self) -> None:
        object.__setattr__(self, "calibrated", tuple(sorted(self.calibrated)))
        diagnostics = self.diagnostics()
        if diagnostics:
            raise ConfigurationError(diagnostics)

    def diagnostics(self) -> List[Diagnostic]:
        found = []
        if self.tac.mode is TacMode.CONFIGURATION_1:
            if self.start_detector is None:
                found.append(Diagnostic("start_detector", "configuration_1 requires a start detector"))
        else:
            if self.start_detector is not None:
                found.append(Diagnostic("start_detector", "configuration_2 takes no start detector"))
            if self.source.trigger_jitter_rms <= 0:
                found.append(Diagnostic("source.trigger_jitter_rms_s", "configuration_2 requires trigger_jitter_rms"))
        if (self.shots is None) == (self.duration is None):
            found.append(Diagnostic("shots", "exactly one of shots and duration_s must be given"))
        if self.shots is not None and self.shots < 1:
            found.append(Diagnostic("shots", "shots must be ≥ 1"))
        if self.duration is not None and self.duration <= 0:
            found.append(Diagnostic("duration_s", "duration must be positive"))
        if not 0 <= self.seed <= MAX_SEED:
            found.append(Diagnostic("seed", "seed must be an unsigned 64-bit integer"))
        if self.guard < 0:
            found.append(Diagnostic("guard_s", "guard cannot be negative"))
        if self.repetition_rate is not None and self.repetition_rate <= 0:
            found.append(Diagnostic("repetition_rate_hz", "repetition rate must be positive"))
        return found

    @property
    def mode(self) -> TacMode:
        return self.tac.mode

    @property
    def effective_repetition_rate(self) -> float:
        """Configured repetition rate, or the fastest one the link allows."""
        if self.repetition_rate is not None:
            return self.repetition_rate
        return 1.0 / (self.link.round_trip_time + self.guard)

    @property
    def shots_to_run(self) -> int:
        if self.shots is not None:
            return int(self.shots)
        return max(1, int(math.floor(self.effective_repetition_rate * float(self.duration))))
