"""
Near-field beam patterns over the range-angle domain.

G(theta, r) = |(w * b(theta_u, r_f))^H b(theta, r)|^2 is evaluated on 1-D cuts
(angle at fixed range, angle on the distance ring, range at fixed angle) and
normalized to a unit peak. The Fresnel closed forms used to cross-check the
range pattern live here too.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Union

import numpy as np
from scipy import integrate, optimize, special

from array_core import (
    ArrayConfig,
    DomainError,
    FocusPoint,
    alias_range,
    distance_ring,
    field_bounds,
    nf_steering_exact,
    nf_steering_fresnel,
)

logger = logging.getLogger(__name__)

SteeringModel = Literal["fresnel", "exact"]
CutAxis = Literal["angle-at-fixed-range", "angle-on-distance-ring", "range-at-fixed-angle"]

ANGLE_SAMPLES = 8192
RANGE_SAMPLES = 65536
RANGE_FLOOR_FRACTION = 1 / 20
FRESNEL_PIECE = 0.5
# points evaluated per matrix product
_CHUNK = 8192


@dataclass(frozen=True)
class Taper:
    weights: np.ndarray
    normalization: Literal["peak-one", "unit-energy"] = "peak-one"

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("taper weights must be a 1-D vector with at least two entries")
        if np.any(w < 0) or not np.any(w > 0):
            raise ValueError("taper weights must be nonnegative with at least one positive entry")
        if self.normalization == "peak-one" and not math.isclose(w.max(), 1.0, rel_tol=1e-12):
            raise ValueError("peak-one taper must have max entry 1")
        if self.normalization == "unit-energy" and not math.isclose(np.linalg.norm(w), 1.0, rel_tol=1e-12):
            raise ValueError("unit-energy taper must have unit 2-norm")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, weights, normalization: str = "peak-one") -> "Taper":
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or not np.any(w > 0):
            raise ValueError("taper weights must be nonnegative with at least one positive entry")
        scale = w.max() if normalization == "peak-one" else np.linalg.norm(w)
        return cls(w / scale, normalization)

    @property
    def size(self) -> int:
        return self.weights.size

    def renormalized(self, normalization: str) -> "Taper":
        return Taper.from_weights(self.weights, normalization)


@dataclass(frozen=True)
class PatternCut:
    axis: CutAxis
    coordinates: np.ndarray
    gain_linear: np.ndarray
    focus: FocusPoint
    gain_db: np.ndarray = field(init=False)

    def __post_init__(self):
        with np.errstate(divide="ignore"):
            db = 10 * np.log10(self.gain_linear)
        object.__setattr__(self, "gain_db", db)

    @classmethod
    def from_gain(cls, axis: CutAxis, coordinates, gain, focus: FocusPoint) -> "PatternCut":
        gain = np.asarray(gain, dtype=float)
        peak = gain.max()
        if not peak > 0:
            raise ValueError("pattern is identically zero on the grid")
        return cls(axis, np.asarray(coordinates, dtype=float), gain / peak, focus)

    @property
    def is_angle(self) -> bool:
        return self.axis != "range-at-fixed-angle"

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.gain_linear))


def steering(config: ArrayConfig, theta, r, model: SteeringModel = "fresnel") -> np.ndarray:
    if model == "fresnel":
        return nf_steering_fresnel(config, theta, r)
    if model == "exact":
        return nf_steering_exact(config, theta, r)
    raise ValueError(f"unknown steering model {model!r}")


def _weights(taper: Union[Taper, np.ndarray]) -> np.ndarray:
    return taper.weights if isinstance(taper, Taper) else np.asarray(taper, dtype=float)


def focusing_weights(config: ArrayConfig, taper, focus: FocusPoint, model: SteeringModel = "fresnel") -> np.ndarray:
    """Complex excitation g = w ⊙ b(theta_u, r_f)."""
    w = _weights(taper)
    if w.size != config.element_count:
        raise ValueError(f"taper has {w.size} weights for {config.element_count} elements")
    return w * steering(config, focus.theta_u, focus.r_f, model)


def beam_gain(config: ArrayConfig, taper, focus: FocusPoint, theta, r, model: SteeringModel = "fresnel"):
    """Unnormalized |g^H b(theta, r)|^2; broadcasts over theta and r."""
    g = focusing_weights(config, taper, focus, model)
    theta, r = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(r, dtype=float))
    flat_theta = theta.ravel()
    flat_r = r.ravel()
    out = np.empty(flat_theta.size)
    for start in range(0, flat_theta.size, _CHUNK):
        stop = start + _CHUNK
        b = steering(config, flat_theta[start:stop], flat_r[start:stop], model)
        out[start:stop] = np.abs(b @ g.conj()) ** 2
    out = out.reshape(theta.shape)
    return float(out) if out.ndim == 0 else out


def angle_grid(focus: FocusPoint, samples: int = ANGLE_SAMPLES) -> np.ndarray:
    """Uniform grid of step pi/samples through theta_u, inside (-pi/2, pi/2)."""
    if samples < 2:
        raise ValueError("angle grid needs at least two samples")
    h = np.pi / samples
    k_lo = math.floor((-np.pi / 2 - focus.theta_u) / h) + 1
    k_hi = math.ceil((np.pi / 2 - focus.theta_u) / h) - 1
    grid = focus.theta_u + np.arange(k_lo, k_hi + 1) * h
    return grid[np.abs(grid) < np.pi / 2]


def range_grid(
    config: ArrayConfig,
    focus: FocusPoint,
    samples: int = RANGE_SAMPLES,
    floor_fraction: float = RANGE_FLOOR_FRACTION,
    alias_guard: bool = True,
) -> np.ndarray:
    """
    Log-uniform grid through r_f over [max(λ, r_f*floor_fraction[, r_alias]), R_D].
    """
    if samples < 2:
        raise ValueError("range grid needs at least two samples")
    lo = max(config.wavelength, focus.r_f * floor_fraction)
    if alias_guard:
        lo = max(lo, alias_range(config, focus))
    hi = max(field_bounds(config).rayleigh_distance, focus.r_f)
    lo = min(lo, focus.r_f)
    h = math.log(hi / lo) / (samples - 1)
    k_lo = math.ceil(math.log(lo / focus.r_f) / h - 1e-9)
    k_hi = math.floor(math.log(hi / focus.r_f) / h + 1e-9)
    return focus.r_f * np.exp(np.arange(k_lo, k_hi + 1) * h)


def _check_grid(grid, target: float, name: str) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError(f"{name} grid is empty")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError(f"{name} grid must be strictly increasing")
    step = np.max(np.diff(grid)) if grid.size > 1 else 0.0
    if np.min(np.abs(grid - target)) > step:
        raise ValueError(f"{name} grid does not reach the focus within one step")
    return grid


def angle_cut(
    config: ArrayConfig,
    taper,
    focus: FocusPoint,
    theta_grid=None,
    mode: Literal["fixed-range", "distance-ring"] = "fixed-range",
    model: SteeringModel = "fresnel",
) -> PatternCut:
    theta = angle_grid(focus) if theta_grid is None else theta_grid
    theta = _check_grid(theta, focus.theta_u, "angle")
    if np.any(np.abs(theta) >= np.pi / 2):
        raise DomainError("angle grid must lie inside (-pi/2, pi/2)")
    if mode == "fixed-range":
        r = np.full_like(theta, focus.r_f)
        axis = "angle-at-fixed-range"
    elif mode == "distance-ring":
        r = distance_ring(focus, theta)
        axis = "angle-on-distance-ring"
    else:
        raise ValueError(f"unknown angle-cut mode {mode!r}")
    gain = beam_gain(config, taper, focus, theta, r, model)
    return PatternCut.from_gain(axis, theta, gain, focus)


def range_cut(config: ArrayConfig, taper, focus: FocusPoint, r_grid=None, model: SteeringModel = "fresnel") -> PatternCut:
    r = range_grid(config, focus) if r_grid is None else r_grid
    r = np.asarray(r, dtype=float)
    if r.size and np.any(r <= 0):
        raise DomainError("range grid must be strictly positive")
    r = _check_grid(r, focus.r_f, "range")
    gain = beam_gain(config, taper, focus, np.full_like(r, focus.theta_u), r, model)
    return PatternCut.from_gain("range-at-fixed-angle", r, gain, focus)


def _fresnel_piecewise(upper: float, kernel) -> float:
    if upper == 0:
        return 0.0
    pieces = max(1, math.ceil(upper / FRESNEL_PIECE))
    edges = np.linspace(0.0, upper, pieces + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(kernel, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
        total += value
    return total


def _fresnel(gamma, kernel):
    gamma = np.asarray(gamma, dtype=float)
    out = np.empty(gamma.shape)
    for idx, g in np.ndenumerate(gamma):
        # odd extension
        out[idx] = math.copysign(_fresnel_piecewise(abs(g), kernel), g) if g else 0.0
    return float(out) if out.ndim == 0 else out


def fresnel_C(gamma):
    return _fresnel(gamma, lambda x: math.cos(math.pi * x * x / 2))


def fresnel_S(gamma):
    return _fresnel(gamma, lambda x: math.sin(math.pi * x * x / 2))


def fresnel_range_gain(gamma):
    """(C²(γ) + S²(γ)) / γ², with the γ → 0 limit 1."""
    gamma = np.abs(np.asarray(gamma, dtype=float))
    c = np.asarray(fresnel_C(gamma))
    s = np.asarray(fresnel_S(gamma))
    small = gamma < 1e-8
    safe = np.where(small, 1.0, gamma)
    out = np.where(small, 1.0, (c**2 + s**2) / safe**2)
    return float(out) if out.ndim == 0 else out


def gamma_param(config: ArrayConfig, theta, r, r_f):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)) or not r_f > 0:
        raise DomainError("ranges must be strictly positive")
    N = config.element_count
    d = config.spacing
    cos2 = np.cos(np.asarray(theta, dtype=float)) ** 2
    r_eff = np.abs(r - r_f) / (2 * r * r_f)
    out = np.sqrt(N**2 * d**2 * cos2 / config.wavelength * r_eff)
    return float(out) if out.ndim == 0 else out


def sinc_first_sidelobe_db(element_count: int) -> float:
    """First sidelobe of the N-element Dirichlet kernel, in dB."""
    N = element_count
    res = optimize.minimize_scalar(
        lambda x: -special.diric(x, N) ** 2,
        bounds=(2 * np.pi / N, 4 * np.pi / N),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(10 * np.log10(-res.fun))


@lru_cache(maxsize=None)
def fresnel_first_sidelobe() -> tuple:
    """(γ, gain) at the first sidelobe peak of the Fresnel range pattern."""
    trough = optimize.minimize_scalar(
        fresnel_range_gain, bounds=(1.5, 2.1), method="bounded", options={"xatol": 1e-10}
    )
    peak = optimize.minimize_scalar(
        lambda g: -fresnel_range_gain(g), bounds=(trough.x, 2.6), method="bounded", options={"xatol": 1e-10}
    )
    return float(peak.x), float(-peak.fun)
