"""Domain types: link plans, sources, detectors, histograms, traces and scenarios."""
from psiotdr.models.analysis_models import (
    AccuracyResult,
    AnalysisReport,
    PeakReport,
    SlopeFit,
    Trace,
)
from psiotdr.models.detection_models import DetectorModel, Histogram, TacConfig, TacMode
from psiotdr.models.link_models import (
    AirGap,
    FiberEnd,
    FiberEndKind,
    FiberSegment,
    ImpulseResponse,
    LinkPlan,
    RayleighPiece,
    Reflection,
    Reflector,
    Splice,
)
from psiotdr.models.photonics_models import DispersionModel, JonesState, PulseSource
from psiotdr.models.scenario_models import Scenario

__all__ = [
    "AccuracyResult",
    "AirGap",
    "AnalysisReport",
    "DetectorModel",
    "DispersionModel",
    "FiberEnd",
    "FiberEndKind",
    "FiberSegment",
    "Histogram",
    "ImpulseResponse",
    "JonesState",
    "LinkPlan",
    "PeakReport",
    "PulseSource",
    "RayleighPiece",
    "Reflection",
    "Reflector",
    "Scenario",
    "SlopeFit",
    "Splice",
    "TacConfig",
    "TacMode",
    "Trace",
]
