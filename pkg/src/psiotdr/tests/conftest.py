"""Test configuration."""
import os
from pathlib import Path

import pytest
from dotenv import load_dotenv

# Set test environment before any imports
os.environ["ENV"] = "test"

# Load test environment variables
test_env_path = Path(__file__).parent.parent.parent.parent / ".env.test"
load_dotenv(test_env_path)

# Import after environment setup
from psiotdr.config import SimulationSettings, ensure_directories  # noqa: E402
from psiotdr.models.detection_models import DetectorModel, TacConfig, TacMode  # noqa: E402
from psiotdr.models.link_models import FiberEnd, FiberEndKind, FiberSegment, LinkPlan, Reflector  # noqa: E402
from psiotdr.models.scenario_models import Scenario  # noqa: E402
from psiotdr.services.preset_service import (  # noqa: E402
    EXTRA_JITTER_FWHM,
    MM_BIN,
    config2_source,
    peak_power_for,
)
from psiotdr.utils.units import distance_to_time  # noqa: E402


@pytest.fixture(autouse=True)
def setup_test_environment():
    """Set up test environment before each test."""
    ensure_directories()
    yield


@pytest.fixture
def simulation_settings() -> SimulationSettings:
    """Small chunks so short runs still span several random streams."""
    return SimulationSettings(threads=1, chunk_shots=4096, progress=False)


def two_reflector_scenario(
    separation: float = 0.1,
    reflectance: float = -20.0,
    launched_photons: float = 100.0,
    shots: int = 200_000,
    seed: int = 7,
) -> Scenario:
    """Connector and cleave ``separation`` metres apart behind a 1 m lead, 1 mm bins."""
    lead = FiberSegment(length=1.0)
    link = LinkPlan(
        (
            lead,
            Reflector(reflectance=reflectance),
            FiberSegment(length=separation),
            FiberEnd(FiberEndKind.CLEAVED),
        )
    )
    window = distance_to_time(separation) + 1.0e-9
    return Scenario(
        name="two-reflectors",
        link=link,
        source=config2_source(30e-12, peak_power_for(launched_photons, 30e-12)),
        stop_detector=DetectorModel(),
        tac=TacConfig(
            mode=TacMode.CONFIGURATION_2,
            bin_width=MM_BIN,
            range=window,
            start_delay=distance_to_time(lead.length) - 0.5e-9,
            extra_jitter_fwhm=EXTRA_JITTER_FWHM,
        ),
        shots=shots,
        seed=seed,
    )


@pytest.fixture
def two_reflectors():
    """Factory for connector-and-cleave scenarios."""
    return two_reflector_scenario


@pytest.fixture
def small_scenario() -> Scenario:
    return two_reflector_scenario()
