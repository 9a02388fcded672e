"""JSON document schema of a scenario file.

Every physical quantity carries its unit in the field name. The document
models only check structure and types; physical invariants are checked by the
domain dataclasses when the document is converted.
"""
import hashlib
import json
from typing import Annotated, Any, Callable, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from psiotdr.config import DEFAULT_GUARD_S
from psiotdr.errors import ConfigurationError, Diagnostic
from psiotdr.models.detection_models import DetectorModel, TacConfig, TacMode
from psiotdr.models.link_models import (
    GLASS_AIR_REFLECTANCE_DB,
    AirGap,
    FiberEnd,
    FiberEndKind,
    FiberSegment,
    LinkPlan,
    Reflector,
    Splice,
)
from psiotdr.models.photonics_models import DispersionModel, JonesState, PulseSource
from psiotdr.models.scenario_models import AnalysisHints, Scenario
from psiotdr.utils.units import DEFAULT_GROUP_INDEX


class _Document(BaseModel):
    model_config = ConfigDict(extra="forbid")


class JonesDocument(_Document):
    x_re: float
    x_im: float = 0.0
    y_re: float
    y_im: float = 0.0


class FiberDocument(_Document):
    kind: Literal["fiber"] = "fiber"
    length_m: float
    attenuation_db_per_km: float = 0.2
    n_g: float = DEFAULT_GROUP_INDEX
    backscatter_coeff_db: float = -82.0
    dispersion_ps_per_nm_km: float = 17.0
    beat_length_m: Optional[float] = None
    birefringence_axis_rad: float = 0.0


class ReflectorDocument(_Document):
    kind: Literal["reflector"] = "reflector"
    reflectance_db: float = GLASS_AIR_REFLECTANCE_DB
    loss_db: float = 0.0


class SpliceDocument(_Document):
    kind: Literal["splice"] = "splice"
    loss_db: float = 0.1


class AirGapDocument(_Document):
    kind: Literal["air_gap"] = "air_gap"
    length_m: float
    surface_reflectance_db: float = GLASS_AIR_REFLECTANCE_DB
    coupling_loss_db: float = 1.0


class FiberEndDocument(_Document):
    kind: Literal["fiber_end"] = "fiber_end"
    end: FiberEndKind = FiberEndKind.CLEAVED
    reflectance_db: Optional[float] = None


ElementDocument = Annotated[
    Union[FiberDocument, ReflectorDocument, SpliceDocument, AirGapDocument, FiberEndDocument],
    Field(discriminator="kind"),
]


class LinkDocument(_Document):
    elements: List[ElementDocument] = Field(default_factory=list)


class SourceDocument(_Document):
    wavelength_m: float = 1551e-9
    fwhm_s: float
    peak_power_w: float
    trigger_jitter_rms_s: float = 0.0
    spectral_width_m: float = 0.0
    tap_fraction: float = 0.01
    polarization: Optional[JonesDocument] = None
    shape: Literal["gaussian"] = "gaussian"


class DetectorDocument(_Document):
    efficiency: float = 0.008
    dark_rate_hz: float = 2000.0
    jitter_fwhm_s: float = 40e-12
    dead_time_s: float = 1e-6
    polarization_analyzer: Optional[JonesDocument] = None


class TacDocument(_Document):
    mode: TacMode
    bin_width_s: float
    range_s: float
    start_delay_s: float = 0.0
    extra_jitter_fwhm_s: float = 0.0


class AnalysisDocument(_Document):
    fit_window_m: Optional[Tuple[float, float]] = None
    beat_window_m: Optional[Tuple[float, float]] = None
    noise_start_m: Optional[float] = None
    min_prominence_db: Optional[float] = None


class ScenarioDocument(_Document):
    name: str = ""
    description: str = ""
    seed: int = 0
    shots: Optional[int] = None
    duration_s: Optional[float] = None
    repetition_rate_hz: Optional[float] = None
    guard_s: float = DEFAULT_GUARD_S
    scrambler: bool = True
    dispersion_model: DispersionModel = DispersionModel.SOURCE_LINEWIDTH
    calibrated: Dict[str, bool] = Field(default_factory=dict)
    link: LinkDocument
    source: SourceDocument
    stop_detector: DetectorDocument = Field(default_factory=DetectorDocument)
    start_detector: Optional[DetectorDocument] = None
    tac: TacDocument
    analysis: AnalysisDocument = Field(default_factory=AnalysisDocument)


def _jones(document: Optional[JonesDocument]) -> Optional[JonesState]:
    return JonesState.from_dict(document.model_dump()) if document is not None else None


def _jones_document(state: Optional[JonesState]) -> Optional[JonesDocument]:
    return JonesDocument(**state.to_dict()) if state is not None else None


def _element(document: ElementDocument):
    if isinstance(document, FiberDocument):
        return FiberSegment(
            length=document.length_m,
            attenuation=document.attenuation_db_per_km,
            n_g=document.n_g,
            backscatter_coeff=document.backscatter_coeff_db,
            dispersion_D=document.dispersion_ps_per_nm_km,
            beat_length=document.beat_length_m,
            birefringence_axis=document.birefringence_axis_rad,
        )
    if isinstance(document, ReflectorDocument):
        return Reflector(reflectance=document.reflectance_db, loss=document.loss_db)
    if isinstance(document, SpliceDocument):
        return Splice(loss=document.loss_db)
    if isinstance(document, AirGapDocument):
        return AirGap(
            length=document.length_m,
            surface_reflectance=document.surface_reflectance_db,
            coupling_loss=document.coupling_loss_db,
        )
    return FiberEnd(end=document.end, reflectance=document.reflectance_db)


def _element_document(element) -> ElementDocument:
    if isinstance(element, FiberSegment):
        return FiberDocument(
            length_m=element.length,
            attenuation_db_per_km=element.attenuation,
            n_g=element.n_g,
            backscatter_coeff_db=element.backscatter_coeff,
            dispersion_ps_per_nm_km=element.dispersion_D,
            beat_length_m=element.beat_length,
            birefringence_axis_rad=element.birefringence_axis,
        )
    if isinstance(element, Reflector):
        return ReflectorDocument(reflectance_db=element.reflectance, loss_db=element.loss)
    if isinstance(element, Splice):
        return SpliceDocument(loss_db=element.loss)
    if isinstance(element, AirGap):
        return AirGapDocument(
            length_m=element.length,
            surface_reflectance_db=element.surface_reflectance,
            coupling_loss_db=element.coupling_loss,
        )
    return FiberEndDocument(end=element.end, reflectance_db=element.reflectance)


def _detector(document: DetectorDocument) -> DetectorModel:
    return DetectorModel(
        efficiency=document.efficiency,
        dark_rate=document.dark_rate_hz,
        jitter_fwhm=document.jitter_fwhm_s,
        dead_time=document.dead_time_s,
        polarization_analyzer=_jones(document.polarization_analyzer),
    )


def _detector_document(det: DetectorModel) -> DetectorDocument:
    return DetectorDocument(
        efficiency=det.efficiency,
        dark_rate_hz=det.dark_rate,
        jitter_fwhm_s=det.jitter_fwhm,
        dead_time_s=det.dead_time,
        polarization_analyzer=_jones_document(det.polarization_analyzer),
    )


def _source(document: SourceDocument) -> PulseSource:
    kwargs: Dict[str, Any] = {}
    if document.polarization is not None:
        kwargs["polarization"] = _jones(document.polarization)
    return PulseSource(
        wavelength=document.wavelength_m,
        fwhm=document.fwhm_s,
        peak_power=document.peak_power_w,
        trigger_jitter_rms=document.trigger_jitter_rms_s,
        spectral_width=document.spectral_width_m,
        tap_fraction=document.tap_fraction,
        shape=document.shape,
        **kwargs,
    )


def _tac(document: TacDocument) -> TacConfig:
    return TacConfig(
        mode=document.mode,
        bin_width=document.bin_width_s,
        range=document.range_s,
        start_delay=document.start_delay_s,
        extra_jitter_fwhm=document.extra_jitter_fwhm_s,
    )


def _build(path: str, factory: Callable[[], Any], diagnostics: List[Diagnostic]) -> Any:
    """Run ``factory`` and file its ConfigurationError diagnostics under ``path``."""
    try:
        return factory()
    except ConfigurationError as e:
        for d in e.diagnostics:
            diagnostics.append(Diagnostic(d.path if d.path.startswith("link") else _join(path, d.path), d.message))
    except ValueError as e:
        diagnostics.append(Diagnostic(path, str(e)))
    return None


def _join(prefix: str, path: str) -> str:
    return f"{prefix}.{path}" if path else prefix


def document_from_data(data: Any) -> ScenarioDocument:
    """Validate the structure of a parsed JSON document, reporting every problem."""
    try:
        return ScenarioDocument.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(
            [Diagnostic(".".join(str(part) for part in error["loc"]), error["msg"]) for error in e.errors()]
        ) from e


def scenario_from_document(document: ScenarioDocument) -> Scenario:
    """Convert a structurally valid document into a Scenario.

    Every invariant violation across the document is collected before raising.
    """
    diagnostics: List[Diagnostic] = []
    link = _build("link", lambda: LinkPlan(tuple(_element(e) for e in document.link.elements)), diagnostics)
    source = _build("source", lambda: _source(document.source), diagnostics)
    stop = _build("stop_detector", lambda: _detector(document.stop_detector), diagnostics)
    start = None
    if document.start_detector is not None:
        start = _build("start_detector", lambda: _detector(document.start_detector), diagnostics)
    tac = _build("tac", lambda: _tac(document.tac), diagnostics)
    if diagnostics:
        raise ConfigurationError(diagnostics)

    hints = document.analysis
    return Scenario(
        link=link,
        source=source,
        stop_detector=stop,
        tac=tac,
        start_detector=start,
        scrambler=document.scrambler,
        shots=document.shots,
        duration=document.duration_s,
        seed=document.seed,
        name=document.name,
        description=document.description,
        dispersion_model=document.dispersion_model,
        repetition_rate=document.repetition_rate_hz,
        guard=document.guard_s,
        calibrated=tuple(sorted(path for path, flag in document.calibrated.items() if flag)),
        analysis=AnalysisHints(
            fit_window=tuple(hints.fit_window_m) if hints.fit_window_m else None,
            beat_window=tuple(hints.beat_window_m) if hints.beat_window_m else None,
            noise_start=hints.noise_start_m,
            min_prominence=hints.min_prominence_db,
        ),
    )


def document_from_scenario(scenario: Scenario) -> ScenarioDocument:
    source = scenario.source
    hints = scenario.analysis
    return ScenarioDocument(
        name=scenario.name,
        description=scenario.description,
        seed=scenario.seed,
        shots=scenario.shots,
        duration_s=scenario.duration,
        repetition_rate_hz=scenario.repetition_rate,
        guard_s=scenario.guard,
        scrambler=scenario.scrambler,
        dispersion_model=scenario.dispersion_model,
        calibrated={path: True for path in scenario.calibrated},
        link=LinkDocument(elements=[_element_document(e) for e in scenario.link.elements]),
        source=SourceDocument(
            wavelength_m=source.wavelength,
            fwhm_s=source.fwhm,
            peak_power_w=source.peak_power,
            trigger_jitter_rms_s=source.trigger_jitter_rms,
            spectral_width_m=source.spectral_width,
            tap_fraction=source.tap_fraction,
            polarization=_jones_document(source.polarization),
            shape=source.shape,
        ),
        stop_detector=_detector_document(scenario.stop_detector),
        start_detector=_detector_document(scenario.start_detector) if scenario.start_detector else None,
        tac=TacDocument(
            mode=scenario.tac.mode,
            bin_width_s=scenario.tac.bin_width,
            range_s=scenario.tac.range,
            start_delay_s=scenario.tac.start_delay,
            extra_jitter_fwhm_s=scenario.tac.extra_jitter_fwhm,
        ),
        analysis=AnalysisDocument(
            fit_window_m=hints.fit_window,
            beat_window_m=hints.beat_window,
            noise_start_m=hints.noise_start,
            min_prominence_db=hints.min_prominence,
        ),
    )


def scenario_to_data(scenario: Scenario) -> Dict[str, Any]:
    """Plain JSON-ready dict of a scenario."""
    return document_from_scenario(scenario).model_dump(mode="json")


def canonical_json(scenario: Scenario, indent: Optional[int] = 2) -> str:
    """Stable JSON text of a scenario (sorted keys)."""
    separators = (",", ": ") if indent else (",", ":")
    return json.dumps(scenario_to_data(scenario), sort_keys=True, indent=indent, separators=separators)


def scenario_hash(scenario: Scenario) -> str:
    """SHA-256 of the compact canonical document without the seed.

    The seed is recorded next to the hash in every histogram.
    """
    data = scenario_to_data(scenario)
    data.pop("seed", None)
    text = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
