"""Physical constants, time/distance conversion, dB arithmetic and Gaussian width algebra.

Everything is in SI base units (seconds, metres, watts, hertz). Display
formatting converts at the edges.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from psiotdr.errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0  # m/s
PLANCK = 6.62607015e-34  # J*s
DEFAULT_GROUP_INDEX = 1.468

# 2*sqrt(2*ln 2)
FWHM_PER_RMS = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class GroupIndexContext:
    """Group index used to convert round-trip time into displayed one-way distance."""
    n_g: float = DEFAULT_GROUP_INDEX

    def __post_init__(self) -> None:
        if not self.n_g > 1.0:
            raise DomainError(f"group index must exceed 1, got {self.n_g}")

    @property
    def group_velocity(self) -> float:
        return SPEED_OF_LIGHT / self.n_g


DEFAULT_CONTEXT = GroupIndexContext()


class WidthKind(str, Enum):
    """Direction of a Gaussian width conversion."""
    FWHM_TO_RMS = "fwhm_to_rms"
    RMS_TO_FWHM = "rms_to_fwhm"


def time_to_distance(t: float, ctx: GroupIndexContext = DEFAULT_CONTEXT) -> float:
    """Convert a round-trip time in seconds into a one-way distance in metres."""
    if t < 0:
        raise DomainError(f"round-trip time cannot be negative, got {t}")
    return ctx.group_velocity * t / 2.0


def distance_to_time(d: float, ctx: GroupIndexContext = DEFAULT_CONTEXT) -> float:
    """Convert a one-way distance in metres into a round-trip time in seconds."""
    if d < 0:
        raise DomainError(f"distance cannot be negative, got {d}")
    return 2.0 * d / ctx.group_velocity


def times_to_distances(t: np.ndarray, ctx: GroupIndexContext = DEFAULT_CONTEXT) -> np.ndarray:
    """Vectorised time_to_distance for sample axes."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("round-trip times cannot be negative")
    return ctx.group_velocity * t / 2.0


def quadrature_width(components: Iterable[float]) -> float:
    """Root-sum-square of independent Gaussian widths, all in the same unit."""
    values = [float(w) for w in components]
    if any(w < 0 for w in values):
        raise DomainError("widths cannot be negative")
    if not values:
        return 0.0
    return math.hypot(*values)


def gaussian_fwhm_rms(w: float, direction: WidthKind = WidthKind.FWHM_TO_RMS) -> float:
    """Convert a Gaussian width between FWHM and rms."""
    if w < 0:
        raise DomainError(f"width cannot be negative, got {w}")
    direction = WidthKind(direction)
    if direction is WidthKind.FWHM_TO_RMS:
        return w / FWHM_PER_RMS
    return w * FWHM_PER_RMS


def fwhm_to_rms(w: float) -> float:
    return gaussian_fwhm_rms(w, WidthKind.FWHM_TO_RMS)


def rms_to_fwhm(w: float) -> float:
    return gaussian_fwhm_rms(w, WidthKind.RMS_TO_FWHM)


def db(x: float) -> float:
    """Linear power ratio to decibels."""
    if x <= 0:
        raise DomainError(f"dB of a non-positive ratio is undefined, got {x}")
    return 10.0 * math.log10(x)


def from_db(x_db: float) -> float:
    """Decibels to a linear power ratio."""
    return 10.0 ** (x_db / 10.0)


def photon_energy(wavelength: float) -> float:
    """Energy of one photon in joules."""
    if wavelength <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    return PLANCK * SPEED_OF_LIGHT / wavelength
