"""
Uniform linear array geometry and steering-vector models.

All angles are radians and all distances meters. Steering functions broadcast
over `theta` / `r` / `omega` and return arrays of shape (..., N).
"""

import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Fraction of the aperture scale used for the inner radiative boundary.
FRESNEL_INNER_FACTOR = 0.62


class DomainError(ValueError):
    """Raised when a physical input lies outside the model's domain."""


class ArrayConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    element_count: int = Field(ge=2)
    spacing: float = Field(gt=0)
    carrier_frequency: float = Field(gt=0)
    index_convention: Literal["centered", "zero-based"] = "centered"
    # "span" -> D = (N-1)d, "full" -> D = N*d
    aperture_convention: Literal["span", "full"] = "span"

    @classmethod
    def half_wavelength(cls, element_count: int, carrier_frequency: float, **kwargs) -> "ArrayConfig":
        """Build a config with d = λ/2 at the given carrier."""
        wavelength = SPEED_OF_LIGHT / carrier_frequency
        return cls(
            element_count=element_count,
            spacing=wavelength / 2,
            carrier_frequency=carrier_frequency,
            **kwargs,
        )

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def offsets(self) -> np.ndarray:
        """Element offsets n used inside every phase term."""
        n = np.arange(self.element_count, dtype=float)
        if self.index_convention == "centered":
            return n - (self.element_count - 1) / 2
        return n


class FocusPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta_u: float
    r_f: float = Field(gt=0)

    @field_validator("theta_u")
    @classmethod
    def _lateral_angle(cls, value: float) -> float:
        if not abs(value) < np.pi / 2:
            raise ValueError(f"theta_u must lie in (-pi/2, pi/2), got {value}")
        return value


class FieldBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    fresnel_inner: float
    rayleigh_distance: float


def aperture_length(config: ArrayConfig) -> float:
    count = config.element_count - 1 if config.aperture_convention == "span" else config.element_count
    return count * config.spacing


def field_bounds(config: ArrayConfig) -> FieldBounds:
    D = aperture_length(config)
    lam = config.wavelength
    return FieldBounds(
        fresnel_inner=FRESNEL_INNER_FACTOR * np.sqrt(D**3 / lam),
        rayleigh_distance=2 * D**2 / lam,
    )


def classify_range(config: ArrayConfig, r: float) -> str:
    """Return "reactive", "radiative-near" or "far" for a distance r."""
    bounds = field_bounds(config)
    if r < bounds.fresnel_inner:
        return "reactive"
    if r < bounds.rayleigh_distance:
        return "radiative-near"
    return "far"


def distance_ring(focus: FocusPoint, theta):
    """Range on the ring cos²θ/r = cos²θᵤ/r_f through the focus."""
    theta = np.asarray(theta, dtype=float)
    return focus.r_f * np.cos(theta) ** 2 / np.cos(focus.theta_u) ** 2


def alias_range(config: ArrayConfig, focus: FocusPoint) -> float:
    """
    Range below r_f where the quadratic phase step between adjacent elements
    reaches pi along the focus direction.
    """
    n = config.offsets
    step = np.max(np.abs(np.diff(n**2)))
    cos2 = np.cos(focus.theta_u) ** 2
    delta = config.wavelength / (config.spacing**2 * cos2 * step)
    return 1.0 / (1.0 / focus.r_f + delta)


def _angles(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) > np.pi / 2):
        raise DomainError("steering angle must satisfy |theta| <= pi/2")
    return theta


def _ranges(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("range must be strictly positive")
    return r


def ff_steering(config: ArrayConfig, theta) -> np.ndarray:
    theta = _angles(theta)
    x = config.offsets * config.spacing
    phase = -config.wavenumber * np.sin(theta)[..., None] * x
    return np.exp(1j * phase) / np.sqrt(config.element_count)


def nf_steering_exact(config: ArrayConfig, theta, r) -> np.ndarray:
    """
    Spherical-wave response. The phase sign is chosen so that the Fresnel
    model below is its second-order expansion (and ff_steering its limit).
    """
    theta, r = np.broadcast_arrays(_angles(theta), _ranges(r))
    x = config.offsets * config.spacing
    s = np.sin(theta)[..., None]
    rr = r[..., None]
    dist = np.sqrt(rr**2 + x**2 - 2 * rr * x * s)
    # dist - r without cancellation at large r
    excess = (x**2 - 2 * rr * x * s) / (dist + rr)
    return np.exp(1j * config.wavenumber * excess) / np.sqrt(config.element_count)


def nf_steering_fresnel(config: ArrayConfig, theta, r) -> np.ndarray:
    theta, r = np.broadcast_arrays(_angles(theta), _ranges(r))
    x = config.offsets * config.spacing
    s = np.sin(theta)[..., None]
    c2 = np.cos(theta)[..., None] ** 2
    phase = -config.wavenumber * (x * s - x**2 * c2 / (2 * r[..., None]))
    return np.exp(1j * phase) / np.sqrt(config.element_count)


def nf_steering_omega(config: ArrayConfig, omega, r) -> np.ndarray:
    """Fresnel response in the normalized angular variable Ω = (d/λ) sin θ."""
    omega = np.asarray(omega, dtype=float)
    limit = config.spacing / config.wavelength
    if np.any(np.abs(omega) > limit * (1 + 1e-12)):
        raise DomainError(f"|omega| must not exceed d/lambda = {limit}")
    omega, r = np.broadcast_arrays(omega, _ranges(r))
    n = config.offsets
    lam = config.wavelength
    d = config.spacing
    om = omega[..., None]
    rr = r[..., None]
    phase = -2 * np.pi * (om * n - n**2 * d**2 / (2 * rr * lam) + om**2 * n**2 * lam / (2 * rr))
    return np.exp(1j * phase) / np.sqrt(config.element_count)
