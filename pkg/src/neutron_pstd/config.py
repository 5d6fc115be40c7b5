"""JSON run configuration: strict schema and conversion into engine objects.

All quantities are dimensionless unless the key ends in ``_physical``
(energies in meV, lengths in Angstrom). Unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .engine import RunConfig
from .errors import ConfigurationError
from .incidence import IncidentSpec, spin_state
from .magnetics import SphereFieldSpec, bake_potential, load_voxel_field
from .scaling import GridSpec, build_layout, make_scaling

IntTriple = Union[int, tuple[int, int, int]]
FloatTriple = Union[float, tuple[float, float, float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSection(_Strict):
    n: IntTriple
    d: Optional[FloatTriple] = None
    cells_per_wavelength: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _spacing(self):
        if (self.d is None) == (self.cells_per_wavelength is None):
            raise ValueError("give exactly one of 'd' and 'cells_per_wavelength'")
        return self

    def spacing(self):
        if self.d is not None:
            return self.d
        return 2.0 * math.pi / self.cells_per_wavelength


class LayoutSection(_Strict):
    abc: IntTriple
    sf: IntTriple
    transition: IntTriple
    surface_shift: int = 0


class FieldSection(_Strict):
    kind: Literal["none", "sphere", "voxel"] = "none"
    strength_ratio: Optional[float] = Field(default=None, ge=0)
    radius: Optional[float] = Field(default=None, gt=0)
    cutoff_ratio: float = Field(default=8.175, ge=1)
    magnetization_axis: tuple[float, float, float] = (0.0, 1.0, 0.0)
    voxel_path: Optional[str] = None
    E0_physical: Optional[float] = Field(default=None, gt=0)
    V0_physical: Optional[float] = Field(default=None, ge=0)
    radius_physical: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _consistent(self):
        if self.kind == "sphere":
            if (self.strength_ratio is None) == (self.V0_physical is None):
                raise ValueError("sphere needs exactly one of 'strength_ratio' and 'V0_physical'")
            if (self.radius is None) == (self.radius_physical is None):
                raise ValueError("sphere needs exactly one of 'radius' and 'radius_physical'")
            if (self.V0_physical is not None or self.radius_physical is not None) and self.E0_physical is None:
                raise ValueError("physical field quantities need 'E0_physical'")
        if self.kind == "voxel" and not self.voxel_path:
            raise ValueError("voxel field needs 'voxel_path'")
        return self

    def sphere_spec(self):
        ratio, radius = self.strength_ratio, self.radius
        if self.E0_physical is not None:
            ctx = make_scaling(self.E0_physical)
            if self.V0_physical is not None:
                ratio = self.V0_physical / self.E0_physical
            if self.radius_physical is not None:
                radius = ctx.length(self.radius_physical)
        return SphereFieldSpec(ratio, radius, self.cutoff_ratio, self.magnetization_axis)


class IncidenceSection(_Strict):
    direction: tuple[float, float, float] = (0.0, 1.0, 0.0)
    spin: Union[str, tuple[float, float]] = "z+"
    profile: Literal["monochromatic", "gaussian"] = "monochromatic"
    width: Optional[float] = Field(default=None, gt=0)
    offset: float = 0.0
    ramp_periods: float = Field(default=5.0, ge=0)


class RunSection(_Strict):
    safety: float = Field(default=0.9, gt=0)
    dt: Optional[float] = Field(default=None, gt=0)
    U0: float = Field(default=5.0, gt=0)
    alpha: float = Field(default=0.1, gt=0)
    taper_profile: str = "quintic"
    periods: int = Field(default=2, ge=2)
    steady_tol: float = Field(default=1e-5, gt=0)
    steady_floor: float = Field(default=1e-6, ge=0)
    min_periods: Optional[int] = Field(default=None, ge=1)
    warmup_periods: Optional[int] = Field(default=None, ge=0)
    max_steps: int = Field(default=200_000, ge=1)
    monitor_stride: int = Field(default=10, ge=0)
    divergence_factor: float = Field(default=1e3, gt=1)
    dtype: Literal["complex128", "complex64"] = "complex128"
    allow_unstable: bool = False


class SweepSection(_Strict):
    planes: tuple[Literal["xy", "yz"], ...] = ("xy",)
    step_deg: float = Field(default=2.0, gt=0, le=90)
    forward_window_deg: float = Field(default=15.0, ge=0, le=180)
    fresnel_radii: tuple[float, ...] = (100.0, 200.0)


class SimulationConfig(_Strict):
    grid: GridSection
    layout: LayoutSection
    field: FieldSection = FieldSection()
    incidence: IncidenceSection = IncidenceSection()
    run: RunSection = RunSection()
    sweep: SweepSection = SweepSection()


def _format_errors(err):
    lines = []
    for e in err.errors():
        where = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"  {where}: {e['msg']}")
    return "\n".join(lines)


def parse_config(data, source="<config>"):
    """Validate a mapping; schema problems become :class:`ConfigurationError` with key paths."""
    try:
        return SimulationConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigurationError(f"{source}: invalid configuration\n{_format_errors(err)}") from None


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"configuration file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"{path}: not valid JSON ({err})") from None
    return parse_config(data, str(path))


def _spin(value):
    if isinstance(value, str):
        return spin_state(value)
    theta, phi = value
    return spin_state(theta=theta, phi=phi)


def build_run(cfg, spin=None, potential=None):
    """Engine objects for a validated configuration; ``spin`` overrides the configured incidence spin.

    A pre-baked ``potential`` may be passed to share one bake between runs.
    """
    grid = GridSpec.centered(cfg.grid.n, cfg.grid.spacing())
    lay = cfg.layout
    layout = build_layout(grid, {"abc": lay.abc, "sf": lay.sf, "transition": lay.transition}, lay.surface_shift)
    inc = cfg.incidence
    direction = np.asarray(inc.direction, dtype=float)
    incident = IncidentSpec(tuple(direction / np.linalg.norm(direction)),
                            _spin(spin if spin is not None else inc.spin), inc.profile,
                            inc.width if inc.width is not None else math.inf, inc.offset, inc.ramp_periods)
    if potential is None:
        potential = bake_field(cfg, grid, layout)
    r = cfg.run
    run_config = RunConfig(grid, layout, incident, potential, safety=r.safety, dt=r.dt, U0=r.U0, alpha=r.alpha,
                           taper_profile=r.taper_profile, periods=r.periods, steady_tol=r.steady_tol,
                           steady_floor=r.steady_floor, min_periods=r.min_periods,
                           warmup_periods=r.warmup_periods, max_steps=r.max_steps,
                           monitor_stride=r.monitor_stride, divergence_factor=r.divergence_factor,
                           dtype=r.dtype, allow_unstable=r.allow_unstable)
    return run_config


def bake_field(cfg, grid, layout):
    f = cfg.field
    if f.kind == "none":
        return None
    if f.kind == "sphere":
        return bake_potential(f.sphere_spec().sampler(), grid, layout)
    return bake_potential(load_voxel_field(f.voxel_path), grid, layout)
