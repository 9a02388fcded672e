"""Compile a link plan into its impulse response."""
import logging
import math
from typing import List, Optional, Tuple

from psiotdr.config import settings
from psiotdr.errors import DomainError
from psiotdr.models.link_models import (
    AirGap,
    FiberEnd,
    FiberSegment,
    ImpulseResponse,
    LinkPlan,
    RayleighPiece,
    Reflection,
    Reflector,
    Splice,
)
from psiotdr.utils.units import SPEED_OF_LIGHT, from_db

logger = logging.getLogger(__name__)

REFERENCE_PULSE_WIDTH = 1e-9  # backscatter_coeff is quoted for a 1 ns pulse
MAX_PIECE_LENGTH = 100.0  # m
PIECES_PER_BEAT_LENGTH = 40


def attenuation_per_metre(attenuation_db_per_km: float) -> float:
    """Round-trip power decay rate in 1/m for a one-way loss in dB/km."""
    return 2.0 * attenuation_db_per_km * math.log(10.0) / 10.0 / 1000.0


def fresnel_reflectance(n1: float, n2: float) -> float:
    """Normal-incidence power reflectance between two indices."""
    if n1 <= 0 or n2 <= 0:
        raise DomainError(f"refractive indices must be positive, got {n1} and {n2}")
    return ((n1 - n2) / (n1 + n2)) ** 2


def round_trip_time(plan: LinkPlan) -> float:
    """Round-trip delay of the whole plan, s."""
    return plan.round_trip_time


def max_repetition_rate(plan: LinkPlan, guard: Optional[float] = None) -> float:
    """Fastest pulse rate that keeps one pulse in flight, Hz."""
    if guard is None:
        guard = settings.simulation.guard_s
    period = round_trip_time(plan) + guard
    if period <= 0:
        raise DomainError("round-trip time plus guard must be positive")
    return 1.0 / period


def _piece_length(segment: FiberSegment, max_piece_length: float) -> float:
    length = max_piece_length
    if segment.beat_length is not None:
        length = min(length, segment.beat_length / PIECES_PER_BEAT_LENGTH)
    return length


def _rayleigh_pieces(
    segment: FiberSegment,
    z_start: float,
    t_start: float,
    transmission_sq: float,
    pulse_width: float,
    max_piece_length: float,
) -> List[RayleighPiece]:
    """Split one segment into exponential pieces."""
    density_start = from_db(segment.backscatter_coeff) * (pulse_width / REFERENCE_PULSE_WIDTH) * transmission_sq
    kappa = attenuation_per_metre(segment.attenuation)
    velocity = SPEED_OF_LIGHT / segment.n_g
    count = max(1, int(math.ceil(segment.length / _piece_length(segment, max_piece_length) - 1e-9)))
    step = segment.length / count

    pieces = []
    for i in range(count):
        offset0 = i * step
        offset1 = segment.length if i == count - 1 else (i + 1) * step
        pieces.append(
            RayleighPiece(
                z0=z_start + offset0,
                z1=z_start + offset1,
                t0=t_start + 2.0 * offset0 / velocity,
                t1=t_start + 2.0 * offset1 / velocity,
                density0=density_start * math.exp(-kappa * offset0),
                kappa=kappa,
                n_g=segment.n_g,
            )
        )
    return pieces


def compile_plan(
    plan: LinkPlan,
    pulse_width: float,
    max_piece_length: float = MAX_PIECE_LENGTH,
) -> ImpulseResponse:
    """Compile ``plan`` for a launched pulse of FWHM ``pulse_width``.

    Fractions are relative to the launched pulse energy. Every discrete
    reflection carries the round-trip loss of everything upstream; Rayleigh
    density scales linearly with the pulse width.
    """
    if pulse_width <= 0:
        raise DomainError(f"pulse width must be positive, got {pulse_width}")

    z = 0.0
    t = 0.0
    transmission = 1.0  # one-way power transmission up to z
    n_local = None
    pieces: List[RayleighPiece] = []
    reflections: List[Reflection] = []
    air_spans: List[Tuple[float, float]] = []

    def reflect(reflectance_db: float, label: str, local_n_g: float) -> None:
        fraction = from_db(reflectance_db) * transmission**2
        if fraction > 0:
            reflections.append(Reflection(z=z, time=t, returned_fraction=fraction, local_n_g=local_n_g, label=label))

    for index, element in enumerate(plan.elements):
        if isinstance(element, FiberSegment):
            if element.length > 0:
                pieces.extend(_rayleigh_pieces(element, z, t, transmission**2, pulse_width, max_piece_length))
                z += element.length
                t += 2.0 * element.length * element.n_g / SPEED_OF_LIGHT
                transmission *= from_db(-element.attenuation * element.length / 1000.0)
            n_local = element.n_g
        elif isinstance(element, Reflector):
            reflect(element.reflectance, f"reflector[{index}]", n_local or 1.0)
            transmission *= (1.0 - from_db(element.reflectance)) * from_db(-element.loss)
        elif isinstance(element, Splice):
            transmission *= from_db(-element.loss)
        elif isinstance(element, AirGap):
            face = 1.0 - from_db(element.surface_reflectance)
            coupling = from_db(-element.coupling_loss)
            reflect(element.surface_reflectance, f"air_gap[{index}].entry", n_local or 1.0)
            transmission *= face * coupling
            t_entry = t
            z += element.length
            t += 2.0 * element.length / SPEED_OF_LIGHT
            air_spans.append((t_entry, t))
            reflect(element.surface_reflectance, f"air_gap[{index}].exit", 1.0)
            transmission *= face * coupling
        elif isinstance(element, FiberEnd):
            reflectance = element.effective_reflectance
            if reflectance is not None:
                reflect(reflectance, f"fiber_end[{index}]", n_local or 1.0)

    response = ImpulseResponse(
        rayleigh=tuple(pieces),
        reflections=tuple(reflections),
        total_length=z,
        total_time=t,
        pulse_width=pulse_width,
        air_spans=tuple(air_spans),
    )
    logger.debug(
        f"Compiled link: {z:.3f} m, {len(pieces)} Rayleigh pieces, {len(reflections)} reflections, "
        f"Rayleigh fraction {response.total_rayleigh_fraction:.3e}"
    )
    return response
