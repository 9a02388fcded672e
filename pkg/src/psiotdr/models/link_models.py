"""Models describing the system under test and its compiled impulse response."""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from psiotdr.errors import ConfigurationError, Diagnostic
from psiotdr.utils.units import DEFAULT_GROUP_INDEX, SPEED_OF_LIGHT

GLASS_AIR_REFLECTANCE_DB = 10.0 * math.log10(((DEFAULT_GROUP_INDEX - 1.0) / (DEFAULT_GROUP_INDEX + 1.0)) ** 2)


@dataclass(frozen=True)
class FiberSegment:
    """Uniform fiber section.

    ``attenuation`` is the one-way loss in dB/km, ``backscatter_coeff`` the
    Rayleigh returned fraction in dB for a 1 ns pulse, ``dispersion_D`` in
    ps/(nm km). ``beat_length`` None means an isotropic fiber.
    """
    length: float
    attenuation: float = 0.2
    n_g: float = DEFAULT_GROUP_INDEX
    backscatter_coeff: float = -82.0
    dispersion_D: float = 17.0
    beat_length: Optional[float] = None
    birefringence_axis: float = 0.0

    kind = "fiber"

    def problems(self) -> list:
        found = []
        if self.length < 0:
            found.append("length cannot be negative")
        if self.attenuation < 0:
            found.append("attenuation cannot be negative")
        if self.n_g <= 1:
            found.append("n_g must be greater than 1")
        if self.beat_length is not None and self.beat_length <= 0:
            found.append("beat_length must be positive when present")
        return found


@dataclass(frozen=True)
class Reflector:
    """Discrete reflection such as a connector, with optional insertion loss."""
    reflectance: float = GLASS_AIR_REFLECTANCE_DB
    loss: float = 0.0

    kind = "reflector"

    def problems(self) -> list:
        found = []
        if self.reflectance > 0:
            found.append("reflectance must be <= 0 dB")
        if self.loss < 0:
            found.append("loss cannot be negative")
        return found


@dataclass(frozen=True)
class Splice:
    """Lossy, non-reflective event."""
    loss: float = 0.1

    kind = "splice"

    def problems(self) -> list:
        return ["loss cannot be negative"] if self.loss < 0 else []


@dataclass(frozen=True)
class AirGap:
    """Free-space gap between two lensed fiber faces (a U-bench).

    Each face reflects ``surface_reflectance`` and costs ``coupling_loss``
    one way when light crosses it.
    """
    length: float
    surface_reflectance: float = GLASS_AIR_REFLECTANCE_DB
    coupling_loss: float = 1.0

    kind = "air_gap"

    def problems(self) -> list:
        found = []
        if self.length < 0:
            found.append("length cannot be negative")
        if self.surface_reflectance > 0:
            found.append("surface_reflectance must be <= 0 dB")
        if self.coupling_loss < 0:
            found.append("coupling_loss cannot be negative")
        return found


class FiberEndKind(str, Enum):
    """Termination of the link."""
    CLEAVED = "cleaved"
    CONNECTOR = "connector"
    TERMINATED = "terminated"  # angled or index matched, no reflection


@dataclass(frozen=True)
class FiberEnd:
    """Last element of a plan. ``reflectance`` overrides the kind's default."""
    end: FiberEndKind = FiberEndKind.CLEAVED
    reflectance: Optional[float] = None

    kind = "fiber_end"

    @property
    def effective_reflectance(self) -> Optional[float]:
        """Reflectance in dB, or None when the end does not reflect."""
        if self.reflectance is not None:
            return self.reflectance
        if self.end is FiberEndKind.TERMINATED:
            return None
        return GLASS_AIR_REFLECTANCE_DB

    def problems(self) -> list:
        if self.reflectance is not None and self.reflectance > 0:
            return ["reflectance must be <= 0 dB"]
        return []


LinkEvent = Union[Reflector, Splice, AirGap, FiberEnd]
LinkElement = Union[FiberSegment, LinkEvent]


@dataclass(frozen=True)
class LinkPlan:
    """Ordered system under test, read from the launch end."""
    elements: Tuple[LinkElement, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))
        diagnostics = self.diagnostics()
        if diagnostics:
            raise ConfigurationError(diagnostics)

    def diagnostics(self) -> list:
        found = []
        end_index = None
        for index, element in enumerate(self.elements):
            path = f"link.elements[{index}]"
            for message in element.problems():
                found.append(Diagnostic(f"{path} ({element.kind})", message))
            if end_index is not None:
                found.append(
                    Diagnostic(
                        f"{path} ({element.kind})",
                        f"element after fiber_end at link.elements[{end_index}]",
                    )
                )
            if isinstance(element, FiberEnd) and end_index is None:
                end_index = index
        return found

    @property
    def segments(self) -> Tuple[FiberSegment, ...]:
        return tuple(e for e in self.elements if isinstance(e, FiberSegment))

    @property
    def length(self) -> float:
        """Physical length including air gaps, m."""
        return sum(e.length for e in self.elements if isinstance(e, (FiberSegment, AirGap)))

    @property
    def round_trip_time(self) -> float:
        """Round-trip delay over the whole plan, s. Air gaps travel at c."""
        total = 0.0
        for element in self.elements:
            if isinstance(element, FiberSegment):
                total += 2.0 * element.length * element.n_g / SPEED_OF_LIGHT
            elif isinstance(element, AirGap):
                total += 2.0 * element.length / SPEED_OF_LIGHT
        return total


@dataclass(frozen=True)
class Reflection:
    """Discrete Fresnel return.

    ``time`` is the round-trip delay and ``returned_fraction`` the share of
    launched pulse energy coming back, upstream losses included.
    """
    z: float
    time: float
    returned_fraction: float
    local_n_g: float
    label: str = ""


@dataclass(frozen=True)
class RayleighPiece:
    """Exponentially decaying Rayleigh return over [z0, z1).

    ``density0`` is the returned energy fraction per metre at ``z0``,
    ``kappa`` the round-trip decay rate per metre.
    """
    z0: float
    z1: float
    t0: float
    t1: float
    density0: float
    kappa: float
    n_g: float

    @property
    def velocity(self) -> float:
        return 2.0 * (self.z1 - self.z0) / (self.t1 - self.t0) if self.t1 > self.t0 else 0.0

    @property
    def decay_rate(self) -> float:
        """Decay per second of round-trip time."""
        return self.kappa * self.velocity / 2.0

    @property
    def z_mid(self) -> float:
        return 0.5 * (self.z0 + self.z1)

    @property
    def total_fraction(self) -> float:
        span = self.z1 - self.z0
        if self.kappa == 0:
            return self.density0 * span
        return self.density0 * -math.expm1(-self.kappa * span) / self.kappa


@dataclass(frozen=True)
class ImpulseResponse:
    """Piecewise-analytic reflectivity of a link for one pulse width."""
    rayleigh: Tuple[RayleighPiece, ...] = ()
    reflections: Tuple[Reflection, ...] = ()
    total_length: float = 0.0
    total_time: float = 0.0
    pulse_width: float = 0.0
    air_spans: Tuple[Tuple[float, float], ...] = field(default=())

    def rayleigh_density(self, z: Union[float, np.ndarray]) -> np.ndarray:
        """Returned energy fraction per metre at one-way position ``z``."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.zeros_like(z)
        for piece in self.rayleigh:
            inside = (z >= piece.z0) & (z < piece.z1)
            out[inside] = piece.density0 * np.exp(-piece.kappa * (z[inside] - piece.z0))
        return out

    @property
    def total_rayleigh_fraction(self) -> float:
        return sum(p.total_fraction for p in self.rayleigh)
