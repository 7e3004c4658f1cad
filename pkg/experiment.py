"""
Configuration-driven experiments: window comparison table, pattern cuts and
taper exports.
"""

import json
import logging
import math
import os
from dataclasses import asdict
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from tqdm import tqdm

from array_core import ArrayConfig, FocusPoint, aperture_length, alias_range, field_bounds
from metrics import alpha_3db, hpbd_analytic, hpbw_analytic, sidelobe_report
from pattern_engine import PatternCut, Taper, angle_cut, angle_grid, range_cut, range_grid
from slepian_nf import DEFAULT_GRID_A, DEFAULT_GRID_B, Enlargement, GridSpec, design_slepian, random_j_bound
from utils import OUTPUT_DIR, write_csv, write_json, write_text_atomic
from windows import WindowSpec

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class _Block(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ArrayBlock(_Block):
    element_count: int = Field(128, ge=2)
    carrier_frequency: float = Field(15e9, gt=0)
    # meters, or "half-wavelength"
    spacing: Union[Literal["half-wavelength"], float] = "half-wavelength"
    index_convention: Literal["centered", "zero-based"] = "centered"
    aperture_convention: Literal["span", "full"] = "span"

    def to_config(self) -> ArrayConfig:
        extra = dict(index_convention=self.index_convention, aperture_convention=self.aperture_convention)
        if self.spacing == "half-wavelength":
            return ArrayConfig.half_wavelength(self.element_count, self.carrier_frequency, **extra)
        return ArrayConfig(
            element_count=self.element_count,
            spacing=self.spacing,
            carrier_frequency=self.carrier_frequency,
            **extra,
        )


class FocusBlock(_Block):
    theta_deg: float = 0.0
    r_f: Optional[float] = Field(None, gt=0)
    # used when r_f is not given
    r_f_fraction: float = Field(0.01, gt=0, le=1)

    @model_validator(mode="after")
    def _one_range(self):
        if self.r_f is not None and "r_f_fraction" in self.model_fields_set:
            raise ValueError("give either r_f (meters) or r_f_fraction (of the Rayleigh distance), not both")
        return self

    def resolve(self, config: ArrayConfig) -> FocusPoint:
        r_f = self.r_f if self.r_f is not None else self.r_f_fraction * field_bounds(config).rayleigh_distance
        return FocusPoint(theta_u=math.radians(self.theta_deg), r_f=r_f)


class WindowBlock(_Block):
    name: str = Field(min_length=1)
    kind: Literal["uniform", "hamming", "nf-transform", "classic-slepian", "slepian"]
    prototype: str = "hamming"
    w_ratio: Optional[float] = None
    k_angle: float = Field(1.0, ge=1)
    k_range: float = Field(1.0, ge=1)
    enlargement: Enlargement = "per-side"
    grid_a: GridSpec = DEFAULT_GRID_A
    grid_b: GridSpec = DEFAULT_GRID_B

    @model_validator(mode="after")
    def _resolvable(self):
        if self.kind != "slepian":
            self.spec()
        return self

    def spec(self) -> WindowSpec:
        return WindowSpec(kind=self.kind, prototype=self.prototype, w_ratio=self.w_ratio)


class CutBlock(_Block):
    angle_samples: int = Field(8192, ge=16)
    range_samples: int = Field(65536, ge=16)
    range_floor_fraction: float = Field(1 / 20, gt=0, lt=1)
    alias_guard: bool = True
    prominence_db: float = Field(0.5, gt=0)


class ModeBlock(_Block):
    strict_paper: bool = False
    exact_steering: bool = False
    ring_cut: bool = False
    isll_linear: bool = False


def default_windows() -> List[WindowBlock]:
    return [
        WindowBlock(name="uniform", kind="uniform"),
        WindowBlock(name="hamming", kind="hamming"),
        WindowBlock(name="nf-hamming", kind="nf-transform", prototype="hamming"),
        WindowBlock(name="slepian-1", kind="slepian", k_angle=1, k_range=1, enlargement="inverse-range"),
        WindowBlock(name="slepian-2", kind="slepian", k_angle=5, k_range=50, enlargement="inverse-range"),
        WindowBlock(name="slepian-3", kind="slepian", k_angle=10, k_range=100, enlargement="inverse-range"),
    ]


class ExperimentConfig(_Block):
    array: ArrayBlock = ArrayBlock()
    focus: FocusBlock = FocusBlock()
    windows: List[WindowBlock] = Field(default_factory=default_windows, min_length=1)
    cuts: CutBlock = CutBlock()
    modes: ModeBlock = ModeBlock()
    output_dir: Optional[str] = None
    seed: int = 0

    @field_validator("windows")
    @classmethod
    def _unique_names(cls, windows):
        names = [w.name for w in windows]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValueError(f"duplicate window names: {', '.join(dupes)}")
        return windows

    def window(self, name: str) -> WindowBlock:
        for block in self.windows:
            if block.name == name:
                return block
        raise ConfigError(f"unknown window {name!r}; configured: {', '.join(w.name for w in self.windows)}")

    def with_modes(self, **flags) -> "ExperimentConfig":
        """Turn on mode flags given as True; False leaves the configured value."""
        enabled = {k: True for k, v in flags.items() if v}
        if not enabled:
            return self
        return self.model_copy(update={"modes": self.modes.model_copy(update=enabled)})


def _describe(error: ValidationError) -> str:
    parts = []
    for err in error.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config: {_describe(e)}") from e


def load_config(path: Optional[str] = None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    config = parse_config(data)
    logger.info(f"Loaded experiment config from {path} ({len(config.windows)} windows)")
    return config


def resolve(config: ExperimentConfig) -> Tuple[ArrayConfig, FocusPoint]:
    try:
        array = config.array.to_config()
        return array, config.focus.resolve(array)
    except ValidationError as e:
        raise ConfigError(f"invalid array/focus block: {_describe(e)}") from e


def _steering_model(config: ExperimentConfig) -> str:
    return "exact" if config.modes.exact_steering else "fresnel"


def build_window(config: ExperimentConfig, block: WindowBlock, array: ArrayConfig, focus: FocusPoint) -> Tuple[Taper, dict]:
    if block.kind != "slepian":
        return block.spec().build(array.element_count), {}

    design = design_slepian(
        array,
        focus,
        k_angle=block.k_angle,
        k_range=block.k_range,
        grid_a=block.grid_a,
        grid_b=block.grid_b,
        strict_paper=config.modes.strict_paper,
        enlargement=block.enlargement,
    )
    diagnostics = {
        "concentration_J": design.concentration,
        "lambda_max": float(design.result.eigenvalues[0]),
        "eigenvalues_head": design.spectrum_head,
        "random_j_bound": random_j_bound(design.pair, seed=config.seed),
        "max_residual": design.max_residual,
        "regularization_shift": design.result.shift,
        "discarded_phase_rms_rad": design.phase_rms,
        "enlargement": block.enlargement,
        "mainlobe_region": design.mainlobe.model_dump(),
        "total_region": design.total.model_dump(),
        "grid_a": block.grid_a.model_dump(),
        "grid_b": block.grid_b.model_dump(),
    }
    return design.taper, diagnostics


def compute_cuts(config: ExperimentConfig, taper: Taper, array: ArrayConfig, focus: FocusPoint) -> Tuple[PatternCut, PatternCut]:
    model = _steering_model(config)
    mode = "distance-ring" if config.modes.ring_cut else "fixed-range"
    angle = angle_cut(array, taper, focus, angle_grid(focus, config.cuts.angle_samples), mode=mode, model=model)
    r_grid = range_grid(
        array,
        focus,
        samples=config.cuts.range_samples,
        floor_fraction=config.cuts.range_floor_fraction,
        alias_guard=config.cuts.alias_guard,
    )
    return angle, range_cut(array, taper, focus, r_grid, model=model)


def taper_stats(taper: Taper) -> dict:
    w = taper.weights
    return {
        "min": float(w.min()),
        "max": float(w.max()),
        "mean": float(w.mean()),
        "energy": float(np.sum(w**2)),
        "symmetry_error": float(np.max(np.abs(w - w[::-1]))),
    }


def evaluate_window(config: ExperimentConfig, block: WindowBlock, array: ArrayConfig, focus: FocusPoint) -> dict:
    taper, diagnostics = build_window(config, block, array, focus)
    angle, rng = compute_cuts(config, taper, array, focus)
    squared = not config.modes.isll_linear
    angle_report = sidelobe_report(angle, config.cuts.prominence_db, squared)
    range_report = sidelobe_report(rng, config.cuts.prominence_db, squared)
    diagnostics["angle_mainlobe"] = asdict(angle_report.mainlobe)
    diagnostics["range_mainlobe"] = asdict(range_report.mainlobe)
    return {
        "taper_stats": taper_stats(taper),
        "metrics": {
            "psll_range_db": range_report.psll_db,
            "psll_angle_db": angle_report.psll_db,
            "isll_range_db": range_report.isll_db,
            "isll_angle_db": angle_report.isll_db,
            "bd_m": range_report.width,
            "bw_deg": math.degrees(angle_report.width),
        },
        "diagnostics": diagnostics,
    }


def config_echo(config: ExperimentConfig) -> dict:
    array, focus = resolve(config)
    bounds = field_bounds(array)
    theta = angle_grid(focus, config.cuts.angle_samples)
    r = range_grid(array, focus, config.cuts.range_samples, config.cuts.range_floor_fraction, config.cuts.alias_guard)
    return {
        "config": config.model_dump(),
        "resolved": {
            "wavelength_m": array.wavelength,
            "spacing_m": array.spacing,
            "aperture_m": aperture_length(array),
            "rayleigh_distance_m": bounds.rayleigh_distance,
            "fresnel_inner_m": bounds.fresnel_inner,
            "r_f_m": focus.r_f,
            "theta_u_rad": focus.theta_u,
            "alpha_3db": alpha_3db(),
            "hpbw_analytic_deg": math.degrees(hpbw_analytic(array, focus.theta_u)),
            "hpbd_analytic_m": hpbd_analytic(array, focus),
            "alias_range_m": alias_range(array, focus),
            "angle_grid": {"samples": int(theta.size), "first_deg": math.degrees(theta[0]), "last_deg": math.degrees(theta[-1])},
            "range_grid": {"samples": int(r.size), "first_m": float(r[0]), "last_m": float(r[-1])},
            "prominence_db": config.cuts.prominence_db,
            "steering_model": _steering_model(config),
            "angle_cut_mode": "distance-ring" if config.modes.ring_cut else "fixed-range",
            "isll_integrand": "G" if config.modes.isll_linear else "G^2",
        },
    }


def _cell(value, fmt="{:.2f}") -> str:
    if value is None:
        return "NA"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return fmt.format(value)


TABLE_COLUMNS = [
    ("PSLL range (dB)", "psll_range_db", "{:.2f}"),
    ("PSLL angle (dB)", "psll_angle_db", "{:.2f}"),
    ("ISLL range (dB)", "isll_range_db", "{:.2f}"),
    ("ISLL angle (dB)", "isll_angle_db", "{:.2f}"),
    ("BD (m)", "bd_m", "{:.3f}"),
    ("BW (deg)", "bw_deg", "{:.3f}"),
]


def render_table(per_window: Dict[str, dict]) -> str:
    header = ["Window"] + [title for title, _, _ in TABLE_COLUMNS]
    rows = []
    for name, row in per_window.items():
        if "error" in row:
            rows.append([name, f"FAILED: {row['error']}"])
            continue
        rows.append([name] + [_cell(row["metrics"][key], fmt) for _, key, fmt in TABLE_COLUMNS])
    widths = [max(len(r[i]) for r in [header] + rows if i < len(r)) for i in range(len(header))]
    lines = []
    for r in [header] + rows:
        if len(r) == 2 and r[1].startswith("FAILED"):
            lines.append(f"{r[0]:<{widths[0]}}  {r[1]}")
        else:
            lines.append("  ".join(cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i]) for i, cell in enumerate(r)))
    return "\n".join(lines) + "\n"


def evaluate_all(config: ExperimentConfig, names: Optional[List[str]] = None) -> Dict[str, dict]:
    """Per-window rows in config order; failures are recorded in the row."""
    array, focus = resolve(config)
    blocks = config.windows if names is None else [config.window(n) for n in names]
    per_window = {}
    for block in tqdm(blocks, desc="Windows"):
        try:
            per_window[block.name] = evaluate_window(config, block, array, focus)
        except Exception as e:
            logger.error(f"Window {block.name} failed: {e}")
            per_window[block.name] = {"error": f"{type(e).__name__}: {e}"}
    return per_window


def output_dir(config: ExperimentConfig, out_dir: Optional[str] = None) -> str:
    return out_dir or config.output_dir or os.getenv("NFTAPER_OUT_DIR", OUTPUT_DIR)


def run_table2(config: ExperimentConfig, out_dir: Optional[str] = None) -> dict:
    out = output_dir(config, out_dir)
    per_window = evaluate_all(config)
    report = {
        "config_echo": config_echo(config),
        "per_window": per_window,
        "failed": [name for name, row in per_window.items() if "error" in row],
    }
    write_json(os.path.join(out, "report.json"), report)
    write_text_atomic(os.path.join(out, "table2.txt"), render_table(per_window))
    logger.info(f"Wrote report.json and table2.txt to {out}")
    return report


def export_cut(config: ExperimentConfig, window: str, kind: Literal["angle", "range"], out_dir: Optional[str] = None) -> str:
    if kind not in ("angle", "range"):
        raise ConfigError(f"cut kind must be 'angle' or 'range', got {kind!r}")
    array, focus = resolve(config)
    taper, _ = build_window(config, config.window(window), array, focus)
    angle, rng = compute_cuts(config, taper, array, focus)
    cut = angle if kind == "angle" else rng
    coords = np.degrees(cut.coordinates) if cut.is_angle else cut.coordinates
    path = os.path.join(output_dir(config, out_dir), f"cut_{window}_{kind}.csv")
    return write_csv(path, ["coordinate", "gain_linear", "gain_db"], [coords, cut.gain_linear, cut.gain_db])


def export_taper(config: ExperimentConfig, window: str, out_dir: Optional[str] = None) -> str:
    array, focus = resolve(config)
    taper, diagnostics = build_window(config, config.window(window), array, focus)
    out = output_dir(config, out_dir)
    path = os.path.join(out, f"taper_{window}.csv")
    write_csv(path, ["index", "weight"], [np.arange(taper.size), taper.weights], fmt=["%d", "%.12g"])
    if diagnostics:
        write_json(os.path.join(out, f"taper_{window}.json"), diagnostics)
    return path

