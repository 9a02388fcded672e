"""Models for dB traces and the figures of merit extracted from them."""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from psiotdr.utils.units import DEFAULT_CONTEXT, GroupIndexContext


@dataclass(frozen=True, eq=False)
class Trace:
    """Histogram rendered as level versus one-way distance.

    ``level_db = 5*log10(counts) + offset_db`` so one-way attenuation reads as
    the slope. ``counts`` are the raw histogram counts, ``corrected`` the
    counts used for levels (pile-up corrected when enabled).
    """
    distance: np.ndarray
    level_db: np.ndarray
    counts: np.ndarray
    corrected: np.ndarray
    bin_width: float
    origin: float
    shots: int
    offset_db: float
    floor_db: float
    pileup_corrected: bool = True
    ctx: GroupIndexContext = DEFAULT_CONTEXT
    air_regions: Tuple[Tuple[float, float], ...] = ()

    @property
    def spacing(self) -> float:
        """Distance between consecutive samples, m."""
        return float(self.distance[1] - self.distance[0]) if self.distance.size > 1 else 0.0

    def __len__(self) -> int:
        return int(self.distance.size)

    def window(self, z_start: float, z_end: float) -> np.ndarray:
        """Boolean mask of samples in [z_start, z_end]."""
        return (self.distance >= z_start) & (self.distance <= z_end)

    def index_of(self, z: float) -> int:
        return int(np.clip(np.searchsorted(self.distance, z), 0, self.distance.size - 1))


@dataclass(frozen=True)
class PeakReport:
    """One reflection peak.

    ``height`` is the apex in dB above the local baseline, ``area`` the
    baseline-subtracted counts between the half-maximum crossings.
    """
    position: float
    height: float
    fwhm: float
    area: float
    apex_counts: float = 0.0
    baseline_counts: float = 0.0
    skewness: float = 0.0
    asymmetric: bool = False
    isolated: bool = True
    undersampled: bool = False
    prominence_db: float = 0.0
    index: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "position_m": self.position,
            "height_db": self.height,
            "fwhm_m": self.fwhm,
            "area_counts": self.area,
            "skewness": self.skewness,
            "asymmetric": self.asymmetric,
            "isolated": self.isolated,
            "undersampled": self.undersampled,
        }


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line through display-dB samples of a Rayleigh window."""
    slope_db_per_km: float
    r_squared: float
    relative_error: Optional[float]
    intercept_db: float
    samples: int
    z_start: float
    z_end: float

    def level_at(self, z: float) -> float:
        """Fitted display level at distance ``z`` (m)."""
        return self.intercept_db - self.slope_db_per_km * z / 1000.0


@dataclass(frozen=True)
class AccuracyResult:
    """Spread of the measured inter-peak distance over repeated simulations."""
    mean: float
    std: float
    n: int
    distances: Tuple[float, ...] = ()
    seeds: Tuple[int, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean_m": self.mean,
            "std_m": self.std,
            "n": self.n,
            "distances_m": list(self.distances),
            "seeds": [str(s) for s in self.seeds],
        }


@dataclass
class AnalysisReport:
    """Everything ``analyze`` extracts from one histogram."""
    peaks: List[PeakReport] = field(default_factory=list)
    two_point_resolution: Optional[float] = None
    peak_separation: Optional[float] = None
    slope: Optional[SlopeFit] = None
    dynamic_range: Optional[float] = None
    noise_floor: Optional[float] = None
    beat_length: Optional[float] = None
    accuracy: Optional[AccuracyResult] = None
    air_separation: Optional[float] = None
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        """JSON document with the fixed report field names."""
        return {
            "peaks": [p.to_dict() for p in self.peaks],
            "delta_m": self.two_point_resolution,
            "peak_separation_m": self.peak_separation,
            "air_separation_m": self.air_separation,
            "slope_db_per_km": self.slope.slope_db_per_km if self.slope else None,
            "slope_fit_r2": self.slope.r_squared if self.slope else None,
            "slope_relative_error": self.slope.relative_error if self.slope else None,
            "slope_window_m": [self.slope.z_start, self.slope.z_end] if self.slope else None,
            "dynamic_range_db": self.dynamic_range,
            "noise_floor_db": self.noise_floor,
            "beat_length_m": self.beat_length,
            "accuracy": self.accuracy.to_dict() if self.accuracy else None,
            "warnings": list(self.warnings),
        }

