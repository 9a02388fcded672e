"""Chromatic dispersion broadening and polarization evolution along a link."""
import logging
import math
from typing import Optional, Tuple

import numpy as np

from psiotdr.errors import DomainError
from psiotdr.models.link_models import AirGap, FiberSegment, LinkPlan
from psiotdr.models.photonics_models import DispersionModel, JonesState, PulseSource
from psiotdr.utils.rng import analysis_generator
from psiotdr.utils.units import SPEED_OF_LIGHT

logger = logging.getLogger(__name__)

# FWHM of a Gaussian intensity over its half width at 1/e
FWHM_PER_T0 = 2.0 * math.sqrt(math.log(2.0))
PS_PER_NM_KM = 1e-6  # ps/(nm km) in s/m^2


def beta2(dispersion_D: float, wavelength: float) -> float:
    """Group-velocity dispersion in s^2/m for D in ps/(nm km)."""
    return -dispersion_D * PS_PER_NM_KM * wavelength**2 / (2.0 * math.pi * SPEED_OF_LIGHT)


def dispersion_length(source: PulseSource, segment: FiberSegment) -> float:
    """Length over which a transform-limited pulse broadens by sqrt(2), m."""
    b2 = abs(beta2(segment.dispersion_D, source.wavelength))
    if b2 == 0:
        return math.inf
    t0 = source.fwhm / FWHM_PER_T0
    return t0**2 / b2


def _accumulated_dispersion(plan: LinkPlan, wavelength: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Breakpoints z and the running sums of |D|*2l (s/m) and |beta2|*2l (s^2)."""
    zs = [0.0]
    d_sum = [0.0]
    b_sum = [0.0]
    for element in plan.elements:
        if isinstance(element, FiberSegment):
            zs.append(zs[-1] + element.length)
            d_sum.append(d_sum[-1] + abs(element.dispersion_D) * PS_PER_NM_KM * 2.0 * element.length)
            b_sum.append(b_sum[-1] + abs(beta2(element.dispersion_D, wavelength)) * 2.0 * element.length)
        elif isinstance(element, AirGap):
            zs.append(zs[-1] + element.length)
            d_sum.append(d_sum[-1])
            b_sum.append(b_sum[-1])
    return np.asarray(zs), np.asarray(d_sum), np.asarray(b_sum)


def dispersion_fwhm_profile(
    source: PulseSource,
    plan: LinkPlan,
    z: np.ndarray,
    model: DispersionModel = DispersionModel.SOURCE_LINEWIDTH,
) -> np.ndarray:
    """Pulse FWHM (s) after the round trip to each one-way position in ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z < 0):
        raise DomainError("positions cannot be negative")
    zs, d_sum, b_sum = _accumulated_dispersion(plan, source.wavelength)
    model = DispersionModel(model)

    if model is DispersionModel.SOURCE_LINEWIDTH:
        linewidth = source.spectral_width
        limit = source.transform_limited_width
        if linewidth < limit:
            if linewidth > 0:
                logger.warning(
                    f"Spectral width {linewidth * 1e9:.4f} nm is below the transform limit "
                    f"{limit * 1e9:.4f} nm, using the limit"
                )
            linewidth = limit
        spread = np.interp(z, zs, d_sum) * linewidth
        return np.sqrt(source.fwhm**2 + spread**2)

    t0 = source.fwhm / FWHM_PER_T0
    gdd = np.interp(z, zs, b_sum)
    return source.fwhm * np.sqrt(1.0 + (gdd / t0**2) ** 2)


def dispersion_broadened_fwhm(
    source: PulseSource,
    plan: LinkPlan,
    z: float,
    model: DispersionModel = DispersionModel.SOURCE_LINEWIDTH,
) -> float:
    """Pulse FWHM (s) after travelling to ``z`` and back.

    Fibers with D = 0 leave the pulse unchanged.
    """
    return float(dispersion_fwhm_profile(source, plan, np.array([z]), model)[0])


def dispersion_added_width(
    source: PulseSource,
    plan: LinkPlan,
    z: float,
    model: DispersionModel = DispersionModel.SOURCE_LINEWIDTH,
) -> float:
    """Width (s) that dispersion adds in quadrature to the source FWHM at ``z``."""
    broadened = dispersion_broadened_fwhm(source, plan, z, model)
    return math.sqrt(max(broadened**2 - source.fwhm**2, 0.0))


def birefringence_matrix(retardance: np.ndarray, axis: float) -> np.ndarray:
    """Jones matrices of linear retarders with fast axis at ``axis`` (shape (..., 2, 2))."""
    retardance = np.asarray(retardance, dtype=float)
    c, s = math.cos(axis), math.sin(axis)
    slow = np.exp(-0.5j * retardance)
    fast = np.exp(0.5j * retardance)
    m = np.empty(retardance.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = c * c * slow + s * s * fast
    m[..., 1, 1] = s * s * slow + c * c * fast
    m[..., 0, 1] = c * s * (slow - fast)
    m[..., 1, 0] = m[..., 0, 1]
    return m


def jones_matrices(plan: LinkPlan, z: np.ndarray) -> np.ndarray:
    """One-way Jones matrices from the launch end to each position in ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z < 0):
        raise DomainError("positions cannot be negative")
    out = np.broadcast_to(np.eye(2, dtype=complex), z.shape + (2, 2)).copy()
    prefix = np.eye(2, dtype=complex)
    z_start = 0.0
    for element in plan.elements:
        if isinstance(element, AirGap):
            z_start += element.length
            continue
        if not isinstance(element, FiberSegment):
            continue
        z_end = z_start + element.length
        if element.beat_length is not None and element.length > 0:
            inside = (z > z_start) & (z <= z_end)
            if np.any(inside):
                partial = birefringence_matrix(
                    2.0 * math.pi * (z[inside] - z_start) / element.beat_length,
                    element.birefringence_axis,
                )
                out[inside] = partial @ prefix
            beyond = z > z_end
            retardance = 2.0 * math.pi * element.length / element.beat_length
            prefix = birefringence_matrix(retardance, element.birefringence_axis) @ prefix
            out[beyond] = prefix
        z_start = z_end
    return out


def propagate_jones(state: JonesState, plan: LinkPlan, z: float) -> JonesState:
    """State of polarization after travelling one way to ``z``."""
    matrix = jones_matrices(plan, np.array([z]))[0]
    return JonesState.from_vector(matrix @ state.vector)


def backscatter_jones(plan: LinkPlan, z: float) -> np.ndarray:
    """Round-trip Jones operator for light backscattered at ``z`` (J^T J)."""
    matrix = jones_matrices(plan, np.array([z]))[0]
    return matrix.T @ matrix


def analyzer_projection(
    plan: LinkPlan,
    z: np.ndarray,
    state: JonesState,
    analyzer: Optional[JonesState],
) -> np.ndarray:
    """Fraction of backscattered power passing the analyzer for each position."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if analyzer is None:
        return np.ones_like(z)
    matrices = jones_matrices(plan, z)
    round_trip = np.swapaxes(matrices, -1, -2) @ matrices
    returned = round_trip @ state.vector
    amplitude = returned @ analyzer.vector.conj()
    return np.abs(amplitude) ** 2


def polarization_factors(
    plan: LinkPlan,
    z: np.ndarray,
    state: JonesState,
    analyzer: Optional[JonesState],
    scrambler: bool,
) -> np.ndarray:
    """Detected share of the returned power at each position.

    A scrambler is an ideal depolarizer, so a polarizing detector keeps half.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if analyzer is None:
        return np.ones_like(z)
    if scrambler:
        return np.full_like(z, 0.5)
    return analyzer_projection(plan, z, state, analyzer)


def random_states(count: int, rng: np.random.Generator) -> np.ndarray:
    """Jones vectors uniform on the Poincaré sphere, shape (count, 2)."""
    vectors = rng.standard_normal((count, 2)) + 1j * rng.standard_normal((count, 2))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def scrambled_projection(
    plan: LinkPlan,
    z: float,
    analyzer: JonesState,
    samples: int = 10000,
    seed: int = 0,
) -> float:
    """Mean analyzer-projected backscatter at ``z`` over scrambled input states."""
    rng = analysis_generator(seed)
    states = random_states(samples, rng)
    operator = backscatter_jones(plan, z)
    returned = states @ operator.T
    return float(np.mean(np.abs(returned @ analyzer.vector.conj()) ** 2))

