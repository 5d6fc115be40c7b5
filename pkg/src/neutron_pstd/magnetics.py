"""Dimensionless magnetic interaction ``u = gamma mu_N B / E0`` and its lattice form.

Field samplers share one calling convention: ``sampler(x, y, z)`` takes
broadcastable coordinate arrays and returns ``(ux, uy, uz)``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigurationError, DomainError, IngestionError

VOXEL_MAGIC = b"MAGVOX01"
# magic, 3 x uint32 dims, 3 x f64 spacing, 3 x f64 origin, 4 reserved bytes
VOXEL_HEADER = struct.Struct("<8s3I3d3d4x")


@dataclass(frozen=True)
class SphereFieldSpec:
    """Uniformly magnetized sphere with a hard range cutoff.

    ``strength_ratio`` is V0/E0, ``radius`` the dimensionless radius k0*a,
    ``cutoff_ratio`` is b/a (``math.inf`` for no cutoff).
    """

    strength_ratio: float
    radius: float
    cutoff_ratio: float = 8.175
    magnetization_axis: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        axis = tuple(float(v) for v in self.magnetization_axis)
        object.__setattr__(self, "magnetization_axis", axis)
        if not self.strength_ratio > 0:
            raise DomainError(f"strength_ratio must be positive, got {self.strength_ratio}")
        if not self.radius > 0:
            raise DomainError(f"radius must be positive, got {self.radius}")
        if not self.cutoff_ratio >= 1:
            raise DomainError(f"cutoff_ratio must be >= 1, got {self.cutoff_ratio}")
        if len(axis) != 3 or abs(math.sqrt(sum(v * v for v in axis)) - 1.0) > 1e-12:
            raise DomainError(f"magnetization_axis must be a unit 3-vector, got {axis}")

    @property
    def cutoff_radius(self):
        return self.radius * self.cutoff_ratio

    @property
    def interior_value(self):
        """|u| inside the sphere, which is also the global maximum of |u|."""
        return 2.0 / 3.0 * self.strength_ratio

    def sampler(self):
        return lambda x, y, z: _sphere_components(x, y, z, self)


def _sphere_components(x, y, z, spec):
    x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, z)))
    mx, my, mz = spec.magnetization_axis
    a, s = spec.radius, spec.strength_ratio
    r2 = x * x + y * y + z * z
    inside = r2 < a * a
    shell = ~inside & (r2 <= spec.cutoff_radius ** 2)
    out = [np.zeros(x.shape) for _ in range(3)]
    for comp, m in zip(out, (mx, my, mz)):
        comp[inside] = 2.0 / 3.0 * s * m
    if shell.any():
        xs, ys, zs, rs2 = x[shell], y[shell], z[shell], r2[shell]
        proj = (mx * xs + my * ys + mz * zs) / rs2
        scale = s * a ** 3 / (rs2 * np.sqrt(rs2))
        for comp, c, m in zip(out, (xs, ys, zs), (mx, my, mz)):
            comp[shell] = scale * (proj * c - m / 3.0)
    return tuple(out)


def sphere_field(r, spec):
    """Interaction vector u at point(s) ``r`` (shape ``(..., 3)``) for the cut-off sphere."""
    r = np.asarray(r, dtype=float)
    ux, uy, uz = _sphere_components(r[..., 0], r[..., 1], r[..., 2], spec)
    return np.stack([ux, uy, uz], axis=-1)


def pauli_matrix(u):
    """The Hermitian 2x2 matrix sigma . u."""
    ux, uy, uz = (float(c) for c in u)
    return np.array([[uz, ux - 1j * uy], [ux + 1j * uy, -uz]])


def _fix_phase(v):
    # first non-negligible component made real positive
    k = 0 if abs(v[0]) > 1e-14 else 1
    return v * (abs(v[k]) / v[k])


def pauli_eigenbasis(u):
    """Unitary ``A`` with ``A^dag (sigma.u) A = diag(|u|, -|u|)``; returns ``(A, (|u|, -|u|))``.

    Columns are phase-fixed so that their first non-zero entry is real
    positive; ``u = 0`` gives the identity.
    """
    ux, uy, uz = (float(c) for c in u)
    if not all(map(math.isfinite, (ux, uy, uz))):
        raise DomainError(f"u must be finite, got {u!r}")
    mag = math.sqrt(ux * ux + uy * uy + uz * uz)
    if mag == 0.0:
        return np.eye(2, dtype=complex), (0.0, 0.0)
    if uz >= 0:
        plus = np.array([mag + uz, ux + 1j * uy])
    else:
        plus = np.array([ux - 1j * uy, mag - uz])
    plus = plus / np.linalg.norm(plus)
    minus = np.array([-np.conj(plus[1]), np.conj(plus[0])])
    A = np.column_stack([_fix_phase(plus), _fix_phase(minus)])
    return A, (mag, -mag)


@dataclass
class DimensionlessPotential:
    """Baked interaction field, stored on the TF box only (zero elsewhere by construction)."""

    ux: np.ndarray
    uy: np.ndarray
    uz: np.ndarray
    box: tuple
    shape: tuple
    umax: float

    @classmethod
    def zero(cls, layout):
        box = layout.tf_slices
        sub = tuple(s.stop - s.start for s in box)
        z = np.zeros(sub)
        return cls(z, z.copy(), z.copy(), box, tuple(layout.shape), 0.0)

    @property
    def is_zero(self):
        return self.umax == 0.0

    def full(self):
        """Components expanded to the whole lattice."""
        out = []
        for comp in (self.ux, self.uy, self.uz):
            f = np.zeros(self.shape)
            f[self.box] = comp
            out.append(f)
        return tuple(out)


def bake_potential(sampler, grid, layout, slab=16):
    """Sample ``sampler`` at every lattice point; the result must vanish outside the TF box."""
    x, y, z = (grid.axis_coords(a) for a in range(3))
    tf = layout.tf_box
    comps = [np.zeros(tuple(hi - lo + 1 for lo, hi in tf)) for _ in range(3)]
    leaks = 0
    for i0 in range(0, grid.n[0], slab):
        xs = x[i0:i0 + slab, None, None]
        vals = [np.broadcast_to(np.asarray(v, dtype=float), (len(xs), grid.n[1], grid.n[2]))
                for v in sampler(xs, y[None, :, None], z[None, None, :])]
        nonzero = (vals[0] != 0) | (vals[1] != 0) | (vals[2] != 0)
        inside = np.zeros_like(nonzero)
        rows = np.arange(i0, i0 + len(xs))
        rsel = (rows >= tf[0][0]) & (rows <= tf[0][1])
        inside[rsel, tf[1][0]:tf[1][1] + 1, tf[2][0]:tf[2][1] + 1] = True
        leaks += int(np.count_nonzero(nonzero & ~inside))
        if rsel.any():
            ri = rows[rsel] - tf[0][0]
            for comp, v in zip(comps, vals):
                comp[ri] = v[rsel][:, tf[1][0]:tf[1][1] + 1, tf[2][0]:tf[2][1] + 1]
    if leaks:
        raise ConfigurationError(
            f"magnetic field is non-zero at {leaks} lattice points outside the total-field box; "
            "the interaction range must fit inside the TF core (enlarge the core or reduce the cutoff)")
    if not all(np.isfinite(c).all() for c in comps):
        raise ConfigurationError("magnetic field sampler returned non-finite values")
    umax = float(np.sqrt(comps[0] ** 2 + comps[1] ** 2 + comps[2] ** 2).max()) if comps[0].size else 0.0
    return DimensionlessPotential(*comps, box=layout.tf_slices, shape=tuple(grid.n), umax=umax)


def zero_field(x, y, z):
    shape = np.broadcast_shapes(np.shape(x), np.shape(y), np.shape(z))
    return np.zeros(shape), np.zeros(shape), np.zeros(shape)


def save_voxel_field(path, ux, uy, uz, spacing, origin):
    """Write a voxel file (see :func:`load_voxel_field` for the layout)."""
    ux, uy, uz = (np.asarray(c, dtype="<f8") for c in (ux, uy, uz))
    dims = ux.shape
    if uy.shape != dims or uz.shape != dims or len(dims) != 3:
        raise ValueError("voxel components must be equal-shaped 3D arrays")
    header = VOXEL_HEADER.pack(VOXEL_MAGIC, *dims, *map(float, spacing), *map(float, origin))
    # x fastest, components interleaved per voxel
    payload = np.stack([ux, uy, uz], axis=-1).transpose(2, 1, 0, 3)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(payload, dtype="<f8").tobytes())


def load_voxel_field(path):
    """Read a ``MAGVOX01`` file and return a trilinearly interpolating sampler.

    Layout: 72-byte little-endian header (magic, uint32 dims, f64 spacing,
    f64 origin, 4 reserved bytes) followed by ``nx*ny*nz*3`` float64 values,
    x fastest, (ux, uy, uz) interleaved per voxel. The field is zero outside
    the box spanned by the voxel centres.
    """
    raw = Path(path).read_bytes()
    if len(raw) < VOXEL_HEADER.size:
        raise IngestionError(f"truncated header: {len(raw)} of {VOXEL_HEADER.size} bytes", offset=len(raw))
    magic, nx, ny, nz, dx, dy, dz, ox, oy, oz = VOXEL_HEADER.unpack_from(raw)
    if magic != VOXEL_MAGIC:
        raise IngestionError(f"bad magic {magic!r}", offset=0)
    spacing, origin = (dx, dy, dz), (ox, oy, oz)
    if not all(math.isfinite(v) for v in spacing + origin) or min(spacing) <= 0:
        raise IngestionError("spacing must be positive and origin finite", offset=20)
    count = nx * ny * nz
    expected = VOXEL_HEADER.size + 8 * 3 * count
    if len(raw) != expected:
        raise IngestionError(f"payload size mismatch: file has {len(raw)} bytes, header implies {expected}",
                             offset=min(len(raw), expected))
    if count == 0:
        return zero_field
    if min(nx, ny, nz) < 2:
        raise IngestionError("every voxel axis needs at least 2 samples for interpolation", offset=8)
    values = np.frombuffer(raw, dtype="<f8", offset=VOXEL_HEADER.size)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise IngestionError("non-finite field value", offset=VOXEL_HEADER.size + 8 * int(bad[0]))
    field = values.reshape(nz, ny, nx, 3).transpose(2, 1, 0, 3)
    axes = tuple(o + s * np.arange(n) for o, s, n in zip(origin, spacing, (nx, ny, nz)))
    interp = RegularGridInterpolator(axes, field, method="linear", bounds_error=False, fill_value=0.0)

    def sampler(x, y, z):
        x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, z)))
        u = interp(np.stack([x.ravel(), y.ravel(), z.ravel()], axis=-1)).reshape(*x.shape, 3)
        return u[..., 0], u[..., 1], u[..., 2]

    return sampler
