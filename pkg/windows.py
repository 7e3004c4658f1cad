"""
Amplitude windows: uniform, Hamming, the near-field transform of a continuous
prototype, and the classical (far-field) Slepian sequence.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Literal, Optional, Tuple

import numpy as np
from scipy import linalg

from pattern_engine import Taper

logger = logging.getLogger(__name__)

WindowKind = Literal["uniform", "hamming", "nf-transform", "classic-slepian"]


def hamming_prototype(u):
    """Hamming window as a continuous function on [0, 1]."""
    return 0.54 - 0.46 * np.cos(2 * np.pi * np.asarray(u, dtype=float))


def uniform_prototype(u):
    return np.ones_like(np.asarray(u, dtype=float))


PROTOTYPES: Dict[str, Callable] = {
    "hamming": hamming_prototype,
    "uniform": uniform_prototype,
}


def _check_count(N: int):
    if N < 2:
        raise ValueError(f"window length must be at least 2, got {N}")


def uniform(N: int) -> Taper:
    _check_count(N)
    return Taper(np.ones(N))


def hamming(N: int) -> Taper:
    """Symmetric 0.54/0.46 Hamming window (N-1 denominator)."""
    _check_count(N)
    return Taper.from_weights(np.hamming(N))


def nf_transform(prototype: Callable, N: int) -> Taper:
    """
    w_k = |x_k| * prototype(x_k^2) on the centered coordinate x_k in [-1, 1].

    Evaluating the prototype on x^2 turns the quadratic axial phase across the
    aperture into a linear one; |x| is the Jacobian of that substitution.
    """
    _check_count(N)
    x = (2 * np.arange(N) - (N - 1)) / (N - 1)
    w = np.abs(x) * prototype(x**2)
    if np.any(w < 0):
        raise ValueError("prototype must be nonnegative on [0, 1]")
    return Taper.from_weights(w)


def slepian_kernel(N: int, w_ratio: float) -> np.ndarray:
    n = np.arange(N)
    band = 2 * w_ratio
    return band * np.sinc(band * (n[:, None] - n[None, :]))


def classic_slepian(N: int, w_ratio: float) -> Tuple[Taper, float]:
    """Dominant eigenvector of the sinc concentration kernel and its eigenvalue."""
    _check_count(N)
    if not 0 < w_ratio < 0.5:
        raise ValueError(f"w_ratio must lie in (0, 1/2), got {w_ratio}")
    try:
        values, vectors = linalg.eigh(slepian_kernel(N, w_ratio))
    except linalg.LinAlgError as e:
        raise RuntimeError(f"Sinc kernel eigendecomposition failed: {e}") from e
    v = vectors[:, -1]
    if v[N // 2] < 0:
        v = -v
    scale = np.abs(v).max()
    if np.any(v < -1e-9 * scale):
        raise RuntimeError("Dominant Slepian vector is not single-signed")
    return Taper.from_weights(np.clip(v, 0.0, None)), float(values[-1])


@dataclass(frozen=True)
class WindowSpec:
    kind: WindowKind
    prototype: str = "hamming"
    w_ratio: Optional[float] = None

    def __post_init__(self):
        if self.kind == "nf-transform" and self.prototype not in PROTOTYPES:
            raise ValueError(f"unknown prototype {self.prototype!r}; expected one of {sorted(PROTOTYPES)}")
        if self.kind == "classic-slepian" and not (self.w_ratio is not None and 0 < self.w_ratio < 0.5):
            raise ValueError("classic-slepian needs w_ratio in (0, 1/2)")

    def build(self, N: int) -> Taper:
        if self.kind == "uniform":
            return uniform(N)
        if self.kind == "hamming":
            return hamming(N)
        if self.kind == "nf-transform":
            return nf_transform(PROTOTYPES[self.prototype], N)
        if self.kind == "classic-slepian":
            taper, concentration = classic_slepian(N, self.w_ratio)
            logger.debug(f"Classic Slepian N={N} W/fs={self.w_ratio}: concentration {concentration:.12f}")
            return taper
        raise ValueError(f"unknown window kind {self.kind!r}")
