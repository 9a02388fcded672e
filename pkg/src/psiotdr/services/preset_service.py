"""Built-in scenarios reproducing the reference experiments.

Values that were fitted to reproduce measured widths or count levels rather
than read off the bench are listed in each scenario's ``calibrated`` paths.
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

from psiotdr.errors import ConfigurationError, Diagnostic
from psiotdr.models.detection_models import DetectorModel, TacConfig, TacMode
from psiotdr.models.link_models import AirGap, FiberEnd, FiberEndKind, FiberSegment, LinkPlan, Reflector, Splice
from psiotdr.models.photonics_models import GAUSSIAN_ENERGY_FACTOR, DispersionModel, JonesState, PulseSource
from psiotdr.models.scenario_models import AnalysisHints, Scenario
from psiotdr.utils.units import distance_to_time, photon_energy

logger = logging.getLogger(__name__)

WAVELENGTH = 1551e-9
TAP_FRACTION = 0.01
MM_BIN = distance_to_time(1e-3)

# Electronics jitter of laser driver and TAC, both configurations
EXTRA_JITTER_FWHM = 87e-12
# Laser driver trigger jitter in configuration 2
TRIGGER_JITTER_RMS = 76.4e-12
SOURCE_SPECTRAL_WIDTH = 0.24e-9
# Launched photons per 50 ns pulse giving about 5e-4 Rayleigh counts per bin and shot at the fiber start
COARSE_LAUNCHED_PHOTONS = 38800.0
COARSE_WIDTH = 50e-9
# 50 km runs: about two Rayleigh detections per shot, where first-stop losses and signal balance best
LONG_HAUL_LAUNCHED_PHOTONS = 73700.0
LONG_HAUL_BIN = 2e-6
LONG_HAUL_RATE = 1400.0

PresetFactory = Callable[[], Scenario]


def peak_power_for(launched_photons: float, fwhm: float, tap_fraction: float = TAP_FRACTION) -> float:
    """Source peak power that launches ``launched_photons`` per pulse after the tap."""
    energy = launched_photons * photon_energy(WAVELENGTH) / (1.0 - tap_fraction)
    return energy / (fwhm * GAUSSIAN_ENERGY_FACTOR)


def config2_source(fwhm: float, peak_power: float, **kwargs) -> PulseSource:
    return PulseSource(
        wavelength=WAVELENGTH,
        fwhm=fwhm,
        peak_power=peak_power,
        trigger_jitter_rms=TRIGGER_JITTER_RMS,
        spectral_width=SOURCE_SPECTRAL_WIDTH,
        tap_fraction=TAP_FRACTION,
        **kwargs,
    )


def artefact1_config1() -> Scenario:
    """3 cm U-bench between two lensed faces, optical start from the tap."""
    link = LinkPlan(
        (
            FiberSegment(length=0.5),
            Splice(loss=10.0),
            AirGap(length=0.03, coupling_loss=1.0),
            FiberSegment(length=0.5),
            FiberEnd(FiberEndKind.TERMINATED),
        )
    )
    return Scenario(
        name="artefact1-config1",
        description="U-bench with a 3 cm air gap behind a 10 dB attenuator, configuration 1",
        link=link,
        source=PulseSource(
            wavelength=WAVELENGTH,
            fwhm=30e-12,
            peak_power=peak_power_for(8640.0, 30e-12),
            spectral_width=SOURCE_SPECTRAL_WIDTH,
            tap_fraction=TAP_FRACTION,
        ),
        stop_detector=DetectorModel(),
        start_detector=DetectorModel(),
        tac=TacConfig(
            mode=TacMode.CONFIGURATION_1,
            bin_width=MM_BIN,
            range=2e-9,
            start_delay=4e-9,
            extra_jitter_fwhm=EXTRA_JITTER_FWHM,
        ),
        shots=6_000_000,
        seed=1,
        calibrated=(
            "link.elements[2].coupling_loss_db",
            "source.peak_power_w",
            "tac.extra_jitter_fwhm_s",
        ),
        analysis=AnalysisHints(min_prominence=1.0),
    )


_ARTEFACT2_LEADS: Dict[str, Tuple[str, FiberSegment, float]] = {
    "0km": ("1 m standard fiber lead", FiberSegment(length=1.0, dispersion_D=17.0), 70.4),
    "20km-dsf": ("20 km dispersion-shifted fiber lead", FiberSegment(length=20_000.0, dispersion_D=0.0), 443.0),
    "50km-smf": ("50 km standard fiber lead", FiberSegment(length=50_000.0, dispersion_D=17.0), 7040.0),
}


def _artefact2(variant: str) -> Scenario:
    """Connector followed 4 cm later by a cleave, seen through a lead fiber."""
    label, lead, photons = _ARTEFACT2_LEADS[variant]
    link = LinkPlan(
        (
            lead,
            Reflector(reflectance=-22.0),
            FiberSegment(length=0.04),
            FiberEnd(FiberEndKind.CLEAVED),
        )
    )
    return Scenario(
        name=f"artefact2-config2-{variant}",
        description=f"Connector and cleave 4 cm apart behind a {label}, configuration 2",
        link=link,
        source=config2_source(30e-12, peak_power_for(photons, 30e-12)),
        stop_detector=DetectorModel(),
        tac=TacConfig(
            mode=TacMode.CONFIGURATION_2,
            bin_width=MM_BIN,
            range=1.5e-9,
            start_delay=distance_to_time(lead.length) - 0.5e-9,
            extra_jitter_fwhm=EXTRA_JITTER_FWHM,
        ),
        shots=5_000_000,
        seed=2,
        calibrated=(
            "link.elements[1].reflectance_db",
            "source.peak_power_w",
            "source.spectral_width_m",
            "source.trigger_jitter_rms_s",
            "tac.extra_jitter_fwhm_s",
        ),
        analysis=AnalysisHints(min_prominence=1.0),
    )


def _fiber16km(polarimetric: bool) -> Scenario:
    fiber = FiberSegment(length=16_000.0, attenuation=0.2)
    analyzer: Optional[JonesState] = None
    beat_window = None
    if polarimetric:
        fiber = FiberSegment(length=16_000.0, attenuation=0.2, beat_length=25.0, birefringence_axis=0.0)
        analyzer = JonesState.linear(math.pi / 4)
        beat_window = (1000.0, 15000.0)
    return Scenario(
        name="fiber16km-potdr" if polarimetric else "fiber16km-otdr",
        description=(
            "16 km fiber, polarizer before the stop detector, scrambler off"
            if polarimetric
            else "16 km fiber, coarse 50 ns OTDR with the polarization scrambler on"
        ),
        link=LinkPlan((fiber, FiberEnd(FiberEndKind.TERMINATED))),
        source=config2_source(COARSE_WIDTH, peak_power_for(COARSE_LAUNCHED_PHOTONS, COARSE_WIDTH)),
        stop_detector=DetectorModel(polarization_analyzer=analyzer),
        tac=TacConfig(mode=TacMode.CONFIGURATION_2, bin_width=COARSE_WIDTH, range=165e-6),
        scrambler=not polarimetric,
        duration=1800.0,
        seed=16,
        calibrated=("source.peak_power_w", "source.trigger_jitter_rms_s"),
        analysis=AnalysisHints(fit_window=(1000.0, 15000.0), beat_window=beat_window, noise_start=16100.0),
    )


def pigtail_accuracy() -> Scenario:
    """Connector and cleave 2.265 m apart, repeated to measure the distance spread."""
    lead = FiberSegment(length=2.0)
    link = LinkPlan(
        (
            lead,
            Reflector(reflectance=-20.0, loss=0.3),
            FiberSegment(length=2.265),
            FiberEnd(FiberEndKind.CLEAVED),
        )
    )
    return Scenario(
        name="pigtail2.3m-accuracy",
        description="2.265 m pigtail between a connector and a cleave, configuration 2",
        link=link,
        source=config2_source(30e-12, peak_power_for(80.0, 30e-12)),
        stop_detector=DetectorModel(),
        tac=TacConfig(
            mode=TacMode.CONFIGURATION_2,
            bin_width=MM_BIN,
            range=23.2e-9,
            start_delay=distance_to_time(lead.length) - 0.5e-9,
            extra_jitter_fwhm=EXTRA_JITTER_FWHM,
        ),
        shots=200_000,
        seed=23,
        calibrated=("source.peak_power_w", "source.trigger_jitter_rms_s", "tac.extra_jitter_fwhm_s"),
        analysis=AnalysisHints(min_prominence=1.0),
    )


def _dynamic_range(duration: float) -> Scenario:
    minutes = int(round(duration / 60.0))
    return Scenario(
        name=f"dynamic-range-50km-{minutes}min",
        description=f"50 km fiber integrated for {minutes} min, 2 us bins, 20 km of dark counts after the end",
        link=LinkPlan((FiberSegment(length=50_000.0, attenuation=0.2), FiberEnd(FiberEndKind.TERMINATED))),
        source=config2_source(COARSE_WIDTH, peak_power_for(LONG_HAUL_LAUNCHED_PHOTONS, COARSE_WIDTH)),
        stop_detector=DetectorModel(),
        tac=TacConfig(mode=TacMode.CONFIGURATION_2, bin_width=LONG_HAUL_BIN, range=700e-6),
        repetition_rate=LONG_HAUL_RATE,
        duration=duration,
        seed=50,
        calibrated=("source.peak_power_w", "source.trigger_jitter_rms_s"),
        analysis=AnalysisHints(fit_window=(1000.0, 20000.0), noise_start=50600.0),
    )


PRESETS: Dict[str, PresetFactory] = {
    "artefact1-config1": artefact1_config1,
    "artefact2-config2-0km": lambda: _artefact2("0km"),
    "artefact2-config2-20km-dsf": lambda: _artefact2("20km-dsf"),
    "artefact2-config2-50km-smf": lambda: _artefact2("50km-smf"),
    "fiber16km-otdr": lambda: _fiber16km(polarimetric=False),
    "fiber16km-potdr": lambda: _fiber16km(polarimetric=True),
    "pigtail2.3m-accuracy": pigtail_accuracy,
    "dynamic-range-50km-3min": lambda: _dynamic_range(180.0),
    "dynamic-range-50km-30min": lambda: _dynamic_range(1800.0),
}


def list_presets() -> List[str]:
    return list(PRESETS)


def get_preset(name: str) -> Scenario:
    """Build the named preset scenario."""
    factory = PRESETS.get(name)
    if factory is None:
        raise ConfigurationError(Diagnostic("preset", f"unknown preset '{name}', choose one of: {', '.join(PRESETS)}"))
    scenario = factory()
    logger.debug(f"Built preset {name} ({scenario.mode.value})")
    return scenario
