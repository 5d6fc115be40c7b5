"""Dimensionless units, lattice geometry and the region layout.

Everything downstream works in the rescaled variables

    tau = omega0 * t,    (x, y, z)_bar = k0 * (x, y, z)

so energies are in units of E0, lengths in units of 1/k0 and the free
equation reads ``d psi / d tau = i laplacian(psi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.constants as const

from .errors import ConfigurationError, DomainError

# CODATA values, SI.
CODATA = {
    "neutron_mass": const.physical_constants["neutron mass"][0],
    "hbar": const.hbar,
    "electron_volt": const.electron_volt,
}

ANGSTROM = 1e-10


@dataclass(frozen=True)
class ScalingContext:
    """Reference scales: energy ``E0`` [meV], wavenumber ``k0`` [1/Angstrom],
    angular frequency ``omega0`` [1/s] and reduced wavelength ``lambda_bar0`` [Angstrom]."""

    E0: float
    k0: float
    omega0: float
    lambda_bar0: float

    def length(self, length_angstrom):
        return self.k0 * np.asarray(length_angstrom, dtype=float)

    def length_physical(self, length_bar):
        return np.asarray(length_bar, dtype=float) / self.k0

    def time(self, seconds):
        return self.omega0 * np.asarray(seconds, dtype=float)

    def time_physical(self, tau):
        return np.asarray(tau, dtype=float) / self.omega0

    def energy(self, energy_mev):
        return np.asarray(energy_mev, dtype=float) / self.E0

    def energy_physical(self, energy_bar):
        return np.asarray(energy_bar, dtype=float) * self.E0


def make_scaling(physical_E0, physical_constants=None):
    """Build the unit system for a neutron of energy ``physical_E0`` (meV)."""
    E0 = float(physical_E0)
    if not (E0 > 0.0) or not math.isfinite(E0):
        raise DomainError(f"reference energy must be positive and finite, got {physical_E0!r}")
    c = dict(CODATA)
    if physical_constants:
        c.update(physical_constants)
    joules = E0 * 1e-3 * c["electron_volt"]
    omega0 = joules / c["hbar"]
    k0_si = math.sqrt(2.0 * c["neutron_mass"] * joules) / c["hbar"]
    k0 = k0_si * ANGSTROM
    return ScalingContext(E0=E0, k0=k0, omega0=omega0, lambda_bar0=1.0 / k0)


def _triple(value, name, kind=float):
    if np.ndim(value) == 0:
        value = (value, value, value)
    out = tuple(kind(v) for v in value)
    if len(out) != 3:
        raise ConfigurationError(f"{name} needs 3 components, got {len(out)}")
    return out


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice: ``n`` points per axis, spacing ``d``, coordinate of index 0 at ``origin``."""

    n: tuple
    d: tuple
    origin: tuple

    def __post_init__(self):
        object.__setattr__(self, "n", _triple(self.n, "n", int))
        object.__setattr__(self, "d", _triple(self.d, "d"))
        object.__setattr__(self, "origin", _triple(self.origin, "origin"))
        for axis, (n, d) in enumerate(zip(self.n, self.d)):
            if n < 8:
                raise ConfigurationError(f"axis {'xyz'[axis]}: need at least 8 grid points, got {n}")
            if not (d > 0.0):
                raise ConfigurationError(f"axis {'xyz'[axis]}: spacing must be positive, got {d}")

    @classmethod
    def centered(cls, n, d):
        """Grid whose geometric centre sits at the coordinate origin.

        With an even count the origin falls midway between the two central points.
        """
        n = _triple(n, "n", int)
        d = _triple(d, "d")
        return cls(n=n, d=d, origin=tuple(-0.5 * (ni - 1) * di for ni, di in zip(n, d)))

    @property
    def shape(self):
        return self.n

    @property
    def size(self):
        return self.n[0] * self.n[1] * self.n[2]

    @property
    def cell_volume(self):
        return self.d[0] * self.d[1] * self.d[2]

    def axis_coords(self, axis):
        return self.origin[axis] + np.arange(self.n[axis]) * self.d[axis]

    def coords(self):
        """Broadcastable coordinate arrays ``(x[:,None,None], y[None,:,None], z[None,None,:])``."""
        x, y, z = (self.axis_coords(a) for a in range(3))
        return x[:, None, None], y[None, :, None], z[None, None, :]

    def wavenumbers(self, axis):
        """Angular FFT wavenumbers in numpy's aliasing order, bounded by pi/d."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n[axis], d=self.d[axis])


TF, TRANSITION, SF, ABC = 0, 1, 2, 3
REGION_NAMES = {TF: "TF", TRANSITION: "transition", SF: "SF", ABC: "ABC"}


@dataclass(frozen=True)
class RegionLayout:
    """Nested shells (per axis, identical on both sides) plus virtual-surface planes.

    Boxes are inclusive index ranges ``((lo, hi), (lo, hi), (lo, hi))``.
    """

    shape: tuple
    abc: tuple
    sf: tuple
    transition: tuple
    surface_shift: int = 0
    tf_box: tuple = field(init=False)
    transition_box: tuple = field(init=False)
    sf_box: tuple = field(init=False)
    surface_index: tuple = field(init=False)

    def __post_init__(self):
        tf, tr, sfb, surf = [], [], [], []
        for a in range(3):
            n, wa, ws, wt = self.shape[a], self.abc[a], self.sf[a], self.transition[a]
            sfb.append((wa, n - 1 - wa))
            tr.append((wa + ws, n - 1 - wa - ws))
            tf.append((wa + ws + wt, n - 1 - wa - ws - wt))
            lo = wa + ws // 2 - self.surface_shift
            surf.append((lo, n - 1 - lo))
        object.__setattr__(self, "tf_box", tuple(tf))
        object.__setattr__(self, "transition_box", tuple(tr))
        object.__setattr__(self, "sf_box", tuple(sfb))
        object.__setattr__(self, "surface_index", tuple(surf))

    @staticmethod
    def box_slices(box):
        return tuple(slice(lo, hi + 1) for lo, hi in box)

    @property
    def tf_slices(self):
        return self.box_slices(self.tf_box)

    def labels(self):
        """Per-cell region code (TF, TRANSITION, SF, ABC) as an int8 lattice."""
        out = np.full(self.shape, ABC, dtype=np.int8)
        for code, box in ((SF, self.sf_box), (TRANSITION, self.transition_box), (TF, self.tf_box)):
            out[self.box_slices(box)] = code
        return out

    def region_mask(self, code):
        return self.labels() == code

    def shifted(self, cells):
        """Same shells with the virtual surfaces moved ``cells`` further outward."""
        return build_layout(self.shape, {"abc": self.abc, "sf": self.sf, "transition": self.transition},
                            surface_shift=self.surface_shift + cells)


def build_layout(grid, widths, surface_shift=0):
    """Lay out ABC / SF / transition shells around the TF core.

    ``grid`` may be a :class:`GridSpec` or a bare shape; ``widths`` maps
    ``abc``, ``sf`` and ``transition`` to a cell count (or one per axis).
    """
    shape = grid.n if isinstance(grid, GridSpec) else _triple(grid, "shape", int)
    unknown = set(widths) - {"abc", "sf", "transition"}
    if unknown:
        raise ConfigurationError(f"unknown layout widths: {sorted(unknown)}")
    try:
        w = {k: _triple(widths[k], k, int) for k in ("abc", "sf", "transition")}
    except KeyError as exc:
        raise ConfigurationError(f"missing layout width {exc.args[0]!r}") from None
    for a in range(3):
        name = "xyz"[a]
        for k in ("abc", "sf", "transition"):
            if w[k][a] < 1:
                raise ConfigurationError(f"axis {name}: {k} width must be >= 1, got {w[k][a]}")
        total = w["abc"][a] + w["sf"][a] + w["transition"][a]
        if 2 * total >= shape[a]:
            raise ConfigurationError(
                f"axis {name}: shells of {total} cells per side leave no total-field core "
                f"on an axis of {shape[a]} points")
        lo = w["abc"][a] + w["sf"][a] // 2 - surface_shift
        if not (w["abc"][a] <= lo <= w["abc"][a] + w["sf"][a] - 1):
            raise ConfigurationError(
                f"axis {name}: virtual surface at index {lo} falls outside the scattered-field shell")
    return RegionLayout(shape=tuple(shape), abc=w["abc"], sf=w["sf"], transition=w["transition"],
                        surface_shift=int(surface_shift))


class SpinorLattice:
    """Two complex lattices (spin up, spin down) stored as one ``(2, nx, ny, nz)`` array."""

    __slots__ = ("data",)

    def __init__(self, up, down=None):
        if down is None:
            data = np.asarray(up)
            if data.ndim != 4 or data.shape[0] != 2:
                raise ValueError(f"expected a (2, nx, ny, nz) array, got shape {data.shape}")
        else:
            up, down = np.asarray(up), np.asarray(down)
            if up.shape != down.shape:
                raise ValueError(f"spin components differ in shape: {up.shape} vs {down.shape}")
            data = np.stack([up, down])
        if not np.iscomplexobj(data):
            data = data.astype(np.complex128)
        self.data = data

    @classmethod
    def zeros(cls, shape, dtype=np.complex128):
        return cls(np.zeros((2, *shape), dtype=dtype))

    @property
    def up(self):
        return self.data[0]

    @property
    def down(self):
        return self.data[1]

    @property
    def shape(self):
        return self.data.shape[1:]

    def copy(self):
        return SpinorLattice(self.data.copy())

    def norm(self):
        return float(np.sqrt(np.vdot(self.data, self.data).real))

    def is_finite(self):
        return bool(np.isfinite(self.data).all())

    def __add__(self, other):
        return SpinorLattice(self.data + other.data)

    def __sub__(self, other):
        return SpinorLattice(self.data - other.data)

    def __mul__(self, scalar):
        return SpinorLattice(self.data * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SpinorLattice(shape={self.shape}, dtype={self.data.dtype})"
