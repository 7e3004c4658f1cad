"""
Near-field Slepian taper.

The taper maximizes the share of beam energy that lands in a range-angle
mainlobe region:

    J(w) = w^H A w / w^H B w

A and B are Gram matrices of the Fresnel steering vector integrated (midpoint
Riemann sums over Ω = (d/λ) sin θ and r) over the mainlobe region and the
whole radiative region. The maximizer is the dominant generalized eigenvector
of A v = λ B v; its elementwise magnitude is the amplitude taper.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import linalg

from array_core import ArrayConfig, DomainError, FocusPoint, field_bounds, nf_steering_fresnel, nf_steering_omega
from metrics import hpbd_limits, hpbw_analytic
from pattern_engine import Taper

logger = logging.getLogger(__name__)

REGULARIZATION_EPS = 1e-10
HERMITIAN_RTOL = 1e-12
# grid points per Gram tile
TILE_ROWS = 16384

Enlargement = Literal["per-side", "inverse-range"]


class EigenSolverError(RuntimeError):
    pass


class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_omega: int = Field(ge=64)
    n_r: int = Field(ge=64)
    r_spacing: Literal["linear", "logarithmic"] = "linear"

    def doubled(self) -> "GridSpec":
        return self.model_copy(update={"n_omega": 2 * self.n_omega, "n_r": 2 * self.n_r})


DEFAULT_GRID_A = GridSpec(n_omega=512, n_r=512, r_spacing="linear")
DEFAULT_GRID_B = GridSpec(n_omega=1024, n_r=2048, r_spacing="logarithmic")


class _Region(BaseModel):
    model_config = ConfigDict(frozen=True)

    omega_min: float
    omega_max: float
    r_lo: float = Field(gt=0)
    r_hi: float

    @model_validator(mode="after")
    def _ordered(self):
        if not self.omega_min < self.omega_max:
            raise ValueError("omega_min must be below omega_max")
        if not self.r_lo < self.r_hi:
            raise ValueError("r_lo must be below r_hi")
        return self

    @property
    def area(self) -> float:
        return (self.omega_max - self.omega_min) * (self.r_hi - self.r_lo)


class MainlobeRegion(_Region):
    # names of the bounds that hit a clamp
    clamped: Tuple[str, ...] = ()


class TotalRegion(_Region):
    adjusted: bool = False


def mainlobe_region(
    config: ArrayConfig,
    focus: FocusPoint,
    k_angle: float = 1.0,
    k_range: float = 1.0,
    enlargement: Enlargement = "per-side",
) -> MainlobeRegion:
    """
    3 dB beamwidth/beamdepth box around the focus, enlarged by k_angle in Ω and
    by k_range in range.

    "per-side" stretches each range side of r_f by k_range. "inverse-range"
    scales α₃dB in the beamdepth limits instead, so the box widens by k_range
    in 1/r about 1/r_f; its r_lo stays positive, and r_hi runs out to R_D once
    the scaled far limit is unbounded.
    """
    if k_angle < 1 or k_range < 1:
        raise ValueError("region scale factors must be >= 1")
    ratio = config.spacing / config.wavelength
    omega_u = ratio * math.sin(focus.theta_u)
    half = ratio * math.sin(k_angle * hpbw_analytic(config, focus.theta_u) / 2)
    r_min, r_max = hpbd_limits(config, focus)
    if math.isinf(r_max):
        raise DomainError(
            f"beamdepth at r_f={focus.r_f:.4g} m is unbounded; pass an explicit MainlobeRegion instead"
        )
    if enlargement == "per-side":
        r_lo = focus.r_f - k_range * (focus.r_f - r_min)
        r_hi = focus.r_f + k_range * (r_max - focus.r_f)
    elif enlargement == "inverse-range":
        r_lo, r_hi = hpbd_limits(config, focus, scale=k_range)
    else:
        raise ValueError(f"unknown enlargement {enlargement!r}")
    rayleigh = field_bounds(config).rayleigh_distance

    bounds = {
        "omega_min": omega_u - half,
        "omega_max": omega_u + half,
        "r_lo": r_lo,
        "r_hi": r_hi,
    }
    limits = {
        "omega_min": (max, -ratio),
        "omega_max": (min, ratio),
        "r_lo": (max, config.wavelength),
        "r_hi": (min, rayleigh),
    }
    clamped = []
    for name, (pick, limit) in limits.items():
        value = pick(bounds[name], limit)
        if value != bounds[name]:
            logger.info(f"Mainlobe {name} clamped from {bounds[name]:.6g} to {value:.6g}")
            clamped.append(name)
        bounds[name] = value
    return MainlobeRegion(**bounds, clamped=tuple(clamped))


def total_region(config: ArrayConfig, mainlobe: Optional[MainlobeRegion] = None, strict_paper: bool = False) -> TotalRegion:
    """Whole radiative region; lowered to contain the mainlobe unless strict_paper."""
    bounds = field_bounds(config)
    ratio = config.spacing / config.wavelength
    r_lo = bounds.fresnel_inner
    adjusted = False
    if mainlobe is not None and not strict_paper and mainlobe.r_lo < r_lo:
        logger.info(f"Total region floor lowered from {r_lo:.6g} m to mainlobe floor {mainlobe.r_lo:.6g} m")
        r_lo = mainlobe.r_lo
        adjusted = True
    return TotalRegion(
        omega_min=-ratio,
        omega_max=ratio,
        r_lo=r_lo,
        r_hi=bounds.rayleigh_distance,
        adjusted=adjusted,
    )


def midpoint_nodes(lo: float, hi: float, count: int, spacing: str = "linear") -> Tuple[np.ndarray, np.ndarray]:
    """Cell centers and cell widths of a midpoint rule on [lo, hi]."""
    if spacing == "linear":
        edges = np.linspace(lo, hi, count + 1)
        nodes = (edges[:-1] + edges[1:]) / 2
    elif spacing == "logarithmic":
        edges = np.geomspace(lo, hi, count + 1)
        nodes = np.sqrt(edges[:-1] * edges[1:])
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    return nodes, np.diff(edges)


def _gram(config: ArrayConfig, region: _Region, grid: GridSpec) -> np.ndarray:
    omegas, d_omega = midpoint_nodes(region.omega_min, region.omega_max, grid.n_omega)
    ranges, d_r = midpoint_nodes(region.r_lo, region.r_hi, grid.n_r, grid.r_spacing)
    N = config.element_count
    total = grid.n_omega * grid.n_r
    out = np.zeros((N, N), dtype=complex)
    for start in range(0, total, TILE_ROWS):
        idx = np.arange(start, min(start + TILE_ROWS, total))
        i, j = np.divmod(idx, grid.n_r)
        rows = nf_steering_omega(config, omegas[i], ranges[j])
        X = rows * np.sqrt(d_omega[i] * d_r[j])[:, None]
        out += X.T @ X.conj()
    return (out + out.conj().T) / 2


def build_A(config: ArrayConfig, region: MainlobeRegion, grid: GridSpec = DEFAULT_GRID_A) -> np.ndarray:
    logger.debug(f"Assembling mainlobe matrix on {grid.n_omega}x{grid.n_r} {grid.r_spacing} grid")
    return _gram(config, region, grid)


def build_B(config: ArrayConfig, region: TotalRegion, grid: GridSpec = DEFAULT_GRID_B) -> np.ndarray:
    logger.debug(f"Assembling total-region matrix on {grid.n_omega}x{grid.n_r} {grid.r_spacing} grid")
    return _gram(config, region, grid)


@lru_cache(maxsize=4)
def _cached_B(config: ArrayConfig, region: TotalRegion, grid: GridSpec) -> np.ndarray:
    B = build_B(config, region, grid)
    B.setflags(write=False)
    return B


def clear_matrix_cache():
    _cached_B.cache_clear()


def _is_hermitian(M: np.ndarray) -> bool:
    scale = np.linalg.norm(M)
    return bool(np.linalg.norm(M - M.conj().T) <= HERMITIAN_RTOL * max(scale, np.finfo(float).tiny))


@dataclass(frozen=True)
class ConcentrationPair:
    A: np.ndarray
    B: np.ndarray
    grid_a: Optional[GridSpec] = None
    grid_b: Optional[GridSpec] = None
    mainlobe: Optional[MainlobeRegion] = None
    total: Optional[TotalRegion] = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        B = np.asarray(self.B, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
            raise ValueError(f"A and B must be square and of equal size, got {A.shape} and {B.shape}")
        if not (_is_hermitian(A) and _is_hermitian(B)):
            raise ValueError("A and B must be Hermitian")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def size(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    shift: float
    b_matrix: np.ndarray

    @property
    def dominant(self) -> Tuple[float, np.ndarray]:
        return float(self.eigenvalues[0]), self.eigenvectors[:, 0]


def generalized_herm_eig(pair: ConcentrationPair) -> EigenResult:
    """
    Solve A v = λ B v through B = L L^H and the standard problem on
    L^-1 A L^-H. Eigenvalues are returned in descending order and the
    eigenvectors are B-orthonormal.
    """
    A, B = pair.A, pair.B
    N = pair.size
    floor = REGULARIZATION_EPS * np.trace(B).real / N
    shift = 0.0
    smallest = linalg.eigvalsh(B, subset_by_index=[0, 0])[0]
    if smallest < floor:
        shift = floor
        logger.info(f"B smallest eigenvalue {smallest:.3e} below {floor:.3e}; regularizing")
        B = B + shift * np.eye(N)

    try:
        L = linalg.cholesky(B, lower=True)
    except linalg.LinAlgError as e:
        cond = np.linalg.cond(B)
        raise EigenSolverError(f"Cholesky factorization of B failed (condition estimate {cond:.3e}): {e}") from e

    left = linalg.solve_triangular(L, A, lower=True)
    C = linalg.solve_triangular(L, left.conj().T, lower=True)
    C = (C + C.conj().T) / 2
    try:
        values, Y = linalg.eigh(C)
    except linalg.LinAlgError as e:
        raise EigenSolverError(f"Hermitian eigensolver failed: {e}") from e
    values = values[::-1]
    V = linalg.solve_triangular(L, Y[:, ::-1], lower=True, trans="C")

    residuals = np.linalg.norm(A @ V - (B @ V) * values, axis=0)
    return EigenResult(eigenvalues=values, eigenvectors=V, residuals=residuals, shift=shift, b_matrix=B)


def concentration_J(w, pair: ConcentrationPair) -> float:
    w = np.asarray(w, dtype=complex)
    if not np.any(w):
        raise ValueError("concentration is undefined for the zero vector")
    return float((np.vdot(w, pair.A @ w) / np.vdot(w, pair.B @ w)).real)


def random_j_bound(pair: ConcentrationPair, count: int = 100, seed: int = 0) -> float:
    """Largest J over `count` seeded random complex vectors."""
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((count, pair.size)) + 1j * rng.standard_normal((count, pair.size))
    return max(concentration_J(w, pair) for w in W)


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate v so its center element (or its largest one, if the center is zero) is real positive."""
    ref = v[v.size // 2]
    if abs(ref) <= 1e-12 * np.abs(v).max():
        ref = v[np.argmax(np.abs(v))]
    return v * (abs(ref) / ref)


def discarded_phase_rms(config: ArrayConfig, focus: FocusPoint, v: np.ndarray) -> float:
    """|v|-weighted RMS of the eigenvector phase left after removing the focusing phase."""
    residual = v * np.conj(nf_steering_fresnel(config, focus.theta_u, focus.r_f))
    mag = np.abs(v)
    residual = residual * np.exp(-1j * np.angle(np.sum(residual)))
    phase = np.angle(residual)
    return float(np.sqrt(np.sum(mag * phase**2) / np.sum(mag)))


@dataclass(frozen=True)
class SlepianDesign:
    taper: Taper
    concentration: float
    vector: np.ndarray
    pair: ConcentrationPair
    result: EigenResult
    phase_rms: float
    spectrum_head: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "spectrum_head", self.result.eigenvalues[:8].copy())

    @property
    def max_residual(self) -> float:
        return float(self.result.residuals.max())

    @property
    def mainlobe(self) -> Optional[MainlobeRegion]:
        return self.pair.mainlobe

    @property
    def total(self) -> Optional[TotalRegion]:
        return self.pair.total


def design_slepian(
    config: ArrayConfig,
    focus: FocusPoint,
    k_angle: float = 1.0,
    k_range: float = 1.0,
    grid_a: GridSpec = DEFAULT_GRID_A,
    grid_b: GridSpec = DEFAULT_GRID_B,
    strict_paper: bool = False,
    region: Optional[MainlobeRegion] = None,
    use_cache: bool = True,
    enlargement: Enlargement = "per-side",
) -> SlepianDesign:
    mainlobe = region if region is not None else mainlobe_region(config, focus, k_angle, k_range, enlargement)
    total = total_region(config, mainlobe, strict_paper)
    A = build_A(config, mainlobe, grid_a)
    B = _cached_B(config, total, grid_b) if use_cache else build_B(config, total, grid_b)
    pair = ConcentrationPair(A, B, grid_a, grid_b, mainlobe, total)

    result = generalized_herm_eig(pair)
    lam, v = result.dominant
    v = fix_phase(v)
    taper = Taper.from_weights(np.abs(v))
    J = concentration_J(v, pair)
    design = SlepianDesign(
        taper=taper,
        concentration=J,
        vector=v,
        pair=pair,
        result=result,
        phase_rms=discarded_phase_rms(config, focus, v),
    )
    logger.info(
        f"Slepian taper k=({k_angle:g}, {k_range:g}), {enlargement} enlargement: lambda_max={lam:.6g}, J={J:.6g}, "
        f"max residual {design.max_residual:.3e}"
    )
    return design


def slepian_taper(
    config: ArrayConfig,
    focus: FocusPoint,
    k_angle: float = 1.0,
    k_range: float = 1.0,
    grid_a: GridSpec = DEFAULT_GRID_A,
    grid_b: GridSpec = DEFAULT_GRID_B,
    strict_paper: bool = False,
    enlargement: Enlargement = "per-side",
) -> Tuple[Taper, float]:
    design = design_slepian(config, focus, k_angle, k_range, grid_a, grid_b, strict_paper, enlargement=enlargement)
    return design.taper, design.concentration
