"""
Mainlobe segmentation and sidelobe/beamwidth/beamdepth metrics.

Undefined metrics are returned as None. Sentinels follow the usual float
conventions: -inf for an empty sidelobe region, inf for a width whose
crossing never appears on the grid.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from array_core import ArrayConfig, DomainError, FocusPoint, field_bounds
from pattern_engine import PatternCut, fresnel_range_gain

logger = logging.getLogger(__name__)

PROMINENCE_DB = 0.5
HALF_POWER = 0.5


@dataclass(frozen=True)
class MainlobeSegment:
    status: Literal["found", "undefined"]
    lower_bound: Optional[float] = None
    upper_bound: Optional[float] = None
    lower_index: Optional[int] = None
    upper_index: Optional[int] = None

    @property
    def found(self) -> bool:
        return self.status == "found"


@dataclass(frozen=True)
class SidelobeReport:
    psll_db: Optional[float]
    isll_db: Optional[float]
    width: float
    mainlobe: MainlobeSegment


def _first_rebound(values: np.ndarray, threshold: float) -> Optional[int]:
    """
    Index (into `values`) of the running minimum at the first sample that
    rebounds above it by `threshold`, or None.
    """
    running = np.minimum.accumulate(values)
    rebound = np.flatnonzero(values > running * threshold)
    if rebound.size == 0:
        return None
    j = rebound[0]
    return int(np.argmin(values[: j + 1]))


def segment_mainlobe(cut: PatternCut, prominence_db: float = PROMINENCE_DB) -> MainlobeSegment:
    g = cut.gain_linear
    if not math.isclose(g.max(), 1.0, rel_tol=1e-9):
        raise ValueError("segment_mainlobe expects a peak-normalized cut")
    peak = cut.peak_index
    threshold = 10 ** (prominence_db / 10)

    right = _first_rebound(g[peak:], threshold)
    left = _first_rebound(g[peak::-1], threshold)
    if right is None or left is None or right == 0 or left == 0:
        return MainlobeSegment(status="undefined")

    lo = peak - left
    hi = peak + right
    return MainlobeSegment(
        status="found",
        lower_bound=float(cut.coordinates[lo]),
        upper_bound=float(cut.coordinates[hi]),
        lower_index=lo,
        upper_index=hi,
    )


def psll(cut: PatternCut, segment: MainlobeSegment) -> Optional[float]:
    if not segment.found:
        return None
    sides = np.concatenate([cut.gain_linear[: segment.lower_index], cut.gain_linear[segment.upper_index + 1 :]])
    if sides.size == 0 or sides.max() <= 0:
        return -math.inf
    return float(10 * np.log10(sides.max()))


def _area(y: np.ndarray, x: np.ndarray) -> float:
    return float(integrate.trapezoid(y, x)) if y.size > 1 else 0.0


def isll(cut: PatternCut, segment: MainlobeSegment, squared: bool = True) -> Optional[float]:
    """
    Sidelobe-to-mainlobe integral ratio in dB. `squared` integrates |G|^2 of
    the power pattern; otherwise G itself.
    """
    if not segment.found:
        return None
    x = cut.coordinates
    y = cut.gain_linear**2 if squared else cut.gain_linear
    lo, hi = segment.lower_index, segment.upper_index
    main = _area(y[lo : hi + 1], x[lo : hi + 1])
    side = _area(y[: lo + 1], x[: lo + 1]) + _area(y[hi:], x[hi:])
    if side <= 0:
        return -math.inf
    return float(10 * np.log10(side / main))


def hpbw_analytic(config: ArrayConfig, theta_u: float) -> float:
    cos = math.cos(theta_u)
    if cos < 1e-6:
        raise DomainError("beamwidth is unbounded near endfire (cos(theta_u) < 1e-6)")
    return 0.886 * config.wavelength / (config.element_count * config.spacing * cos)


@lru_cache(maxsize=None)
def alpha_3db() -> float:
    """γ at which the Fresnel range gain falls to one half."""
    return float(optimize.bisect(lambda g: fresnel_range_gain(g) - HALF_POWER, 1.0, 1.4, xtol=1e-12))


def hpbd_limits(config: ArrayConfig, focus: FocusPoint, scale: float = 1.0) -> Tuple[float, float]:
    """(r_f^min, r_f^max); r_f^max is inf past the depth limit. scale multiplies α₃dB."""
    alpha = scale * alpha_3db()
    reach = field_bounds(config).rayleigh_distance * math.cos(focus.theta_u) ** 2
    spread = 4 * focus.r_f * alpha
    r_min = focus.r_f * reach / (reach + spread)
    r_max = focus.r_f * reach / (reach - spread) if reach > spread else math.inf
    return r_min, r_max


def hpbd_analytic(config: ArrayConfig, focus: FocusPoint) -> float:
    r_min, r_max = hpbd_limits(config, focus)
    return r_max - r_min


def _crossing(x: np.ndarray, g: np.ndarray) -> Optional[float]:
    # g[0] is the peak; first sample below half power, interpolated
    below = np.flatnonzero(g < HALF_POWER)
    if below.size == 0:
        return None
    i = below[0]
    x0, x1, g0, g1 = x[i - 1], x[i], g[i - 1], g[i]
    return float(x0 + (HALF_POWER - g0) / (g1 - g0) * (x1 - x0))


def numeric_3db_width(cut: PatternCut) -> float:
    p = cut.peak_index
    x = cut.coordinates
    g = cut.gain_linear
    upper = _crossing(x[p:], g[p:])
    lower = _crossing(x[p::-1], g[p::-1])
    if upper is None or lower is None:
        return math.inf
    return upper - lower


def sidelobe_report(cut: PatternCut, prominence_db: float = PROMINENCE_DB, squared: bool = True) -> SidelobeReport:
    segment = segment_mainlobe(cut, prominence_db)
    if not segment.found:
        logger.debug(f"No mainlobe nulls on {cut.axis} cut; sidelobe metrics undefined")
    return SidelobeReport(
        psll_db=psll(cut, segment),
        isll_db=isll(cut, segment, squared),
        width=numeric_3db_width(cut),
        mainlobe=segment,
    )
