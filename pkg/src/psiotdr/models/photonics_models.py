"""Models for the launched pulse and polarization states."""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from psiotdr.errors import ConfigurationError, DomainError
from psiotdr.utils.units import SPEED_OF_LIGHT

logger = logging.getLogger(__name__)

# Time-bandwidth product of a transform-limited Gaussian pulse
GAUSSIAN_TIME_BANDWIDTH = 2.0 * math.log(2.0) / math.pi
# Energy of a Gaussian pulse divided by peak power times FWHM
GAUSSIAN_ENERGY_FACTOR = math.sqrt(math.pi / (4.0 * math.log(2.0)))


class DispersionModel(str, Enum):
    """How chromatic dispersion broadens the launched pulse."""
    TRANSFORM_LIMITED = "transform_limited"  # Gaussian pulse at its Fourier limit
    SOURCE_LINEWIDTH = "source_linewidth"  # spread set by the source spectral width


@dataclass(frozen=True)
class JonesState:
    """Normalized Jones vector (x, y) in the laboratory frame."""
    x: complex
    y: complex

    def __post_init__(self) -> None:
        norm = math.sqrt(abs(self.x) ** 2 + abs(self.y) ** 2)
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"Jones state must have unit norm, got {norm}")

    @classmethod
    def normalized(cls, x: complex, y: complex) -> "JonesState":
        norm = math.sqrt(abs(x) ** 2 + abs(y) ** 2)
        if norm == 0:
            raise DomainError("Jones state cannot be the zero vector")
        return cls(complex(x) / norm, complex(y) / norm)

    @classmethod
    def linear(cls, angle: float) -> "JonesState":
        """Linear polarization at ``angle`` radians from the x axis."""
        return cls.normalized(math.cos(angle), math.sin(angle))

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "JonesState":
        return cls.normalized(complex(vector[0]), complex(vector[1]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=complex)

    @property
    def angle(self) -> float:
        """Orientation of the major axis, radians."""
        return 0.5 * math.atan2(2.0 * (self.x.conjugate() * self.y).real, abs(self.x) ** 2 - abs(self.y) ** 2)

    def to_dict(self) -> dict:
        return {
            "x_re": self.x.real,
            "x_im": self.x.imag,
            "y_re": self.y.real,
            "y_im": self.y.imag,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "JonesState":
        """Build from a document; vectors already at unit norm are kept bit for bit."""
        x = complex(data["x_re"], data.get("x_im", 0.0))
        y = complex(data["y_re"], data.get("y_im", 0.0))
        if abs(math.sqrt(abs(x) ** 2 + abs(y) ** 2) - 1.0) <= 1e-12:
            return cls(x, y)
        return cls.normalized(x, y)

    def phase_free_equal(self, other: "JonesState", tol: float = 1e-9) -> bool:
        """True when both states describe the same polarization up to a global phase."""
        return abs(abs(np.vdot(self.vector, other.vector)) - 1.0) < tol


def _default_polarization() -> JonesState:
    return JonesState.linear(math.pi / 4)


@dataclass(frozen=True)
class PulseSource:
    """Gaussian pulse source.

    ``peak_power`` is the source peak power before the tap coupler; the
    launched pulse keeps ``1 - tap_fraction`` of it.
    """
    wavelength: float = 1551e-9
    fwhm: float = 30e-12
    peak_power: float = 1e-6
    trigger_jitter_rms: float = 0.0
    spectral_width: float = 0.0
    polarization: JonesState = field(default_factory=_default_polarization)
    tap_fraction: float = 0.01
    shape: str = "gaussian"

    def __post_init__(self) -> None:
        problems = []
        if self.wavelength <= 0:
            problems.append("wavelength must be positive")
        if self.fwhm <= 0:
            problems.append("fwhm must be positive")
        if self.peak_power < 0:
            problems.append("peak_power cannot be negative")
        if self.trigger_jitter_rms < 0:
            problems.append("trigger_jitter_rms cannot be negative")
        if self.spectral_width < 0:
            problems.append("spectral_width cannot be negative")
        if not 0 <= self.tap_fraction < 1:
            problems.append("tap_fraction must be in [0, 1)")
        if self.shape != "gaussian":
            problems.append("only gaussian pulses are supported")
        if problems:
            raise ConfigurationError(problems)

    @property
    def frequency(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength

    @property
    def transform_limited_width(self) -> float:
        """Narrowest spectral width (FWHM, m) compatible with the pulse duration."""
        return self.wavelength**2 * GAUSSIAN_TIME_BANDWIDTH / (SPEED_OF_LIGHT * self.fwhm)

    @property
    def pulse_energy(self) -> float:
        """Energy of one source pulse before the tap, J."""
        return self.peak_power * self.fwhm * GAUSSIAN_ENERGY_FACTOR

