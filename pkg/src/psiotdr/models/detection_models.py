"""Models for the photon-counting detector, the TAC and the start-stop histogram."""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from psiotdr.errors import ConfigurationError
from psiotdr.models.photonics_models import JonesState


@dataclass(frozen=True)
class DetectorModel:
    """Black-box single-photon detector.

    ``polarization_analyzer`` None means a polarization-insensitive detector.
    """
    efficiency: float = 0.008
    dark_rate: float = 2000.0
    jitter_fwhm: float = 40e-12
    dead_time: float = 1e-6
    polarization_analyzer: Optional[JonesState] = None

    def __post_init__(self) -> None:
        problems = []
        if not 0 < self.efficiency <= 1:
            problems.append("efficiency must be in (0, 1]")
        if self.dark_rate < 0:
            problems.append("dark_rate cannot be negative")
        if self.jitter_fwhm < 0:
            problems.append("jitter_fwhm cannot be negative")
        if self.dead_time < 0:
            problems.append("dead_time cannot be negative")
        if problems:
            raise ConfigurationError(problems)


class TacMode(str, Enum):
    """Where the TAC start comes from."""
    CONFIGURATION_1 = "configuration_1"  # optical start from a second detector on the tap
    CONFIGURATION_2 = "configuration_2"  # electrical start from the laser driver


@dataclass(frozen=True)
class TacConfig:
    """Time-to-amplitude converter settings.

    The TAC keeps only the first stop per start. Stops are binned relative to
    the start and the histogram origin equals ``start_delay``.
    """
    mode: TacMode = TacMode.CONFIGURATION_2
    bin_width: float = 9.79344e-12  # 1 mm of one-way distance at the default group index
    range: float = 30e-9
    start_delay: float = 0.0
    extra_jitter_fwhm: float = 0.0
    max_bins: int = 2**26

    stops_per_start = "first_stop_only"

    def __post_init__(self) -> None:
        problems = []
        if self.bin_width <= 0:
            problems.append("bin_width must be positive")
        elif self.range < self.bin_width:
            problems.append("range must be at least one bin_width")
        elif self.bins > self.max_bins:
            problems.append(f"range/bin_width = {self.bins} exceeds the {self.max_bins}-bin memory guard")
        if self.start_delay < 0:
            problems.append("start_delay cannot be negative")
        if self.extra_jitter_fwhm < 0:
            problems.append("extra_jitter_fwhm cannot be negative")
        if problems:
            raise ConfigurationError(problems)

    @property
    def bins(self) -> int:
        return int(round(self.range / self.bin_width))

    @property
    def origin(self) -> float:
        return self.start_delay


@dataclass(frozen=True, eq=False)
class Histogram:
    """First-stop counts binned by start-stop delay.

    ``shots`` counts TAC starts, so ``counts.sum() <= shots``.
    """
    bin_width: float
    origin: float
    counts: np.ndarray
    shots: int
    seed: Optional[int] = None
    scenario_hash: str = ""
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        if self.bin_width <= 0:
            raise ConfigurationError("histogram bin_width must be positive")
        if np.any(counts < 0):
            raise ConfigurationError("histogram counts cannot be negative")
        if int(counts.sum()) > self.shots:
            raise ConfigurationError(f"histogram holds {int(counts.sum())} stops for only {self.shots} starts")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def bin_centers(self) -> np.ndarray:
        return self.origin + (np.arange(self.counts.size) + 0.5) * self.bin_width

    def same_as(self, other: "Histogram") -> bool:
        """Exact equality of header and counts."""
        return (
            self.bin_width == other.bin_width
            and self.origin == other.origin
            and self.shots == other.shots
            and self.seed == other.seed
            and self.scenario_hash == other.scenario_hash
            and np.array_equal(self.counts, other.counts)
        )
