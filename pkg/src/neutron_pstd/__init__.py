"""Pseudospectral time-domain solver for spin-1/2 neutron scattering by magnetic fields."""

from .born import BornParams, ScatterGeometry, F, born_amplitude, born_lab, born_quadrature, frame_rotation, to_lab_frame
from .engine import PstdEngine, RunConfig, abc_mask, max_stable_dt, run, taper_field
from .errors import (ConfigurationError, DivergenceError, DomainError, IngestionError, NeutronPSTDError,
                     QuadratureError, SteadyStateTimeout)
from .farfield import SurfacePhasorRecord, exterior_field, far_amplitude
from .incidence import IncidentSpec, SpinState, incident_value, spin_state
from .magnetics import SphereFieldSpec, bake_potential, load_voxel_field, sphere_field
from .scaling import GridSpec, RegionLayout, SpinorLattice, build_layout, make_scaling

__version__ = "0.1.0"
