"""Surface phasors on the six virtual planes and the exterior Kirchhoff-Helmholtz transform.

Spin components never mix here: outside the total-field core the field is
free, so each component is an independent scalar Helmholtz field (k = 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError

FOUR_PI = 4.0 * math.pi


@dataclass
class SurfacePlane:
    """One face of the virtual box.

    ``axis`` is the normal axis, ``side`` is -1 (low) or +1 (high) and gives
    the outward normal ``side * e_axis``. ``t`` are the two tangential axes,
    ``u``/``v`` their node coordinates and ``weights`` the quadrature weights.
    ``psi`` and ``dpsi_dn`` have shape ``(2, len(u), len(v))``.
    """

    axis: int
    side: int
    index: int
    coord: float
    t: tuple
    u: np.ndarray
    v: np.ndarray
    weights: np.ndarray
    psi: np.ndarray = None
    dpsi_dn: np.ndarray = None
    selector: tuple = None
    rule: str = "gregory"

    @property
    def name(self):
        return ("-" if self.side < 0 else "+") + "xyz"[self.axis]

    @property
    def normal(self):
        n = np.zeros(3)
        n[self.axis] = self.side
        return n

    def points(self):
        """Node positions, shape ``(len(u), len(v), 3)``."""
        p = np.empty((len(self.u), len(self.v), 3))
        p[..., self.axis] = self.coord
        p[..., self.t[0]] = self.u[:, None]
        p[..., self.t[1]] = self.v[None, :]
        return p


def edge_weights(n, h, rule="gregory"):
    """1D weights for ``n`` equispaced nodes spanning a closed interval.

    ``"trapezoid"`` is second order; ``"gregory"`` adds the standard
    fourth-order end corrections (3/8, 7/6, 23/24).
    """
    w = np.ones(n)
    if rule == "trapezoid" or n < 7:
        w[0] = w[-1] = 0.5
    elif rule == "gregory":
        w[:3] = w[-3:][::-1] = (3 / 8, 7 / 6, 23 / 24)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    return w * h


QUADRATURE_RULE = "gregory"


def surface_planes(grid, layout, rule=None):
    """Geometry of the six faces at the layout's virtual-surface indices (no data)."""
    rule = rule or QUADRATURE_RULE
    idx = layout.surface_index
    planes = []
    for a in range(3):
        t = tuple(b for b in range(3) if b != a)
        ranges = [np.arange(idx[b][0], idx[b][1] + 1) for b in t]
        u, v = (grid.axis_coords(b)[r] for b, r in zip(t, ranges))
        weights = np.outer(edge_weights(len(u), grid.d[t[0]], rule), edge_weights(len(v), grid.d[t[1]], rule))
        for side, i in ((-1, idx[a][0]), (1, idx[a][1])):
            sel = [slice(None), None, None, None]
            sel[1 + a] = int(i)
            for b, r in zip(t, ranges):
                sel[1 + b] = slice(int(r[0]), int(r[-1]) + 1)
            planes.append(SurfacePlane(a, side, int(i), float(grid.axis_coords(a)[i]), t, u, v, weights,
                                       selector=tuple(sel), rule=rule))
    return planes


def spectral_derivative_row(n, h, i0):
    """Weights ``c`` with ``(d/dx f)(x_i0) = sum_j c[j] f[j]`` for the periodic spectral derivative."""
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    if n % 2 == 0:
        k[n // 2] = 0.0
    c = np.fft.ifft(1j * k).real
    return c[(i0 - np.arange(n)) % n]


class PhasorAccumulator:
    """Running ``(1/N) sum psi(tau) exp(+i tau)`` over whole carrier periods."""

    def __init__(self, extract, dtype=np.complex128):
        self._extract = extract
        self._sum = None
        self.count = 0
        self.dtype = dtype

    @classmethod
    def lattice(cls, shape, dtype=np.complex128):
        return cls(lambda lat: (lat.data,), dtype)

    @classmethod
    def surfaces(cls, planes, dtype=np.complex128):
        sels = [p.selector for p in planes]
        return cls(lambda lat: tuple(lat.data[s] for s in sels), dtype)

    def add(self, lattice, tau):
        w = complex(math.cos(tau), math.sin(tau))
        parts = self._extract(lattice)
        if self._sum is None:
            self._sum = [np.zeros(p.shape, dtype=self.dtype) for p in parts]
        for acc, p in zip(self._sum, parts):
            acc += w * p
        self.count += 1

    def values(self):
        return [s / self.count for s in self._sum]

    def result(self):
        from .scaling import SpinorLattice

        return SpinorLattice(self.values()[0])


def accumulate_phasor(stream, grid, layout, periods, dt):
    """Demodulate a stream of ``(tau, SpinorLattice)`` over ``periods`` whole carrier periods.

    The stream must supply at least ``periods * 2 pi / dt`` consecutive levels.
    """
    if int(periods) != periods or periods < 2:
        raise ConfigurationError(f"need an integer number (>= 2) of accumulation periods, got {periods!r}")
    nper = 2.0 * math.pi / dt
    if abs(nper - round(nper)) > 1e-9 * nper:
        raise ConfigurationError(f"dt = {dt!r} does not give an integer number of steps per period")
    total = int(round(nper)) * int(periods)
    acc = PhasorAccumulator.lattice(grid.n)
    for count, (tau, lat) in enumerate(stream, start=1):
        acc.add(lat, tau)
        if count == total:
            break
    if acc.count < total:
        raise ConfigurationError(f"stream ended after {acc.count} of {total} levels")
    return SurfacePhasorRecord.from_lattice(acc.result(), grid, layout, periods=int(periods))


@dataclass
class SurfacePhasorRecord:
    """Per-spin phasor and outward normal derivative on the six virtual planes."""

    planes: list
    periods: int = 0
    omega: float = 1.0

    def __post_init__(self):
        if len(self.planes) != 6 or any(p.psi is None or p.dpsi_dn is None for p in self.planes):
            raise ConfigurationError("surface record is incomplete: need data on all six planes")
        for p in self.planes:
            if p.psi.shape != (2, len(p.u), len(p.v)) or p.dpsi_dn.shape != p.psi.shape:
                raise ConfigurationError(f"plane {p.name}: data shape {p.psi.shape} does not match its grid")

    @classmethod
    def from_lattice(cls, phasor, grid, layout, periods=0, rule=None):
        """Cut the planes out of a full-lattice phasor; normal derivatives are spectral."""
        planes = surface_planes(grid, layout, rule)
        data = phasor.data
        for p in planes:
            row = spectral_derivative_row(grid.n[p.axis], grid.d[p.axis], p.index)
            sel = list(p.selector)
            sel[1 + p.axis] = slice(None)
            block = data[tuple(sel)]  # (2, ..., n_axis, ...) with the normal axis kept
            deriv = np.tensordot(block, row, axes=([1 + p.axis], [0]))
            p.psi = np.ascontiguousarray(data[p.selector], dtype=np.complex128)
            p.dpsi_dn = np.ascontiguousarray(p.side * deriv, dtype=np.complex128)
        return cls(planes, periods)

    @classmethod
    def from_function(cls, grid, layout, func, rule=None):
        """Record from an analytic field: ``func(points) -> (psi, grad)`` with points ``(..., 3)``,
        psi ``(2, ...)`` and grad ``(2, ..., 3)``."""
        planes = surface_planes(grid, layout, rule)
        for p in planes:
            psi, grad = func(p.points())
            p.psi = np.asarray(psi, dtype=np.complex128)
            p.dpsi_dn = p.side * np.asarray(grad, dtype=np.complex128)[..., p.axis]
        return cls(planes)

    @property
    def bounds(self):
        lo = np.empty(3)
        hi = np.empty(3)
        for p in self.planes:
            (lo if p.side < 0 else hi)[p.axis] = p.coord
        return lo, hi

    @property
    def center(self):
        lo, hi = self.bounds
        return 0.5 * (lo + hi)

    def zero_like(self):
        planes = [replace(p, psi=np.zeros_like(p.psi), dpsi_dn=np.zeros_like(p.dpsi_dn)) for p in self.planes]
        return SurfacePhasorRecord(planes, self.periods, self.omega)

    def select_spin(self, spin):
        """Copy with the other spin channel zeroed."""
        planes = []
        for p in self.planes:
            psi, dn = np.zeros_like(p.psi), np.zeros_like(p.dpsi_dn)
            psi[spin], dn[spin] = p.psi[spin], p.dpsi_dn[spin]
            planes.append(replace(p, psi=psi, dpsi_dn=dn))
        return SurfacePhasorRecord(planes, self.periods, self.omega)

    # -- serialization ---------------------------------------------------------
    def save(self, path):
        """JSON manifest plus one raw complex128 LE dump per plane (psi_u, psi_d, dn_u, dn_d; u fastest)."""
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        manifest = {"format": "neutron-pstd-surface-record/1", "periods": self.periods, "omega": self.omega,
                    "dtype": "complex128", "byte_order": "little", "index_order": "u-fastest", "planes": []}
        for p in self.planes:
            fname = f"plane_{p.name.replace('+', 'p').replace('-', 'm')}.bin"
            with open(path / fname, "wb") as fh:
                for arr in (p.psi[0], p.psi[1], p.dpsi_dn[0], p.dpsi_dn[1]):
                    fh.write(np.asarray(arr, dtype="<c16").tobytes(order="F"))
            manifest["planes"].append({
                "file": fname, "axis": p.axis, "side": p.side, "index": p.index, "coord": p.coord,
                "tangential_axes": list(p.t), "u": p.u.tolist(), "v": p.v.tolist(), "rule": p.rule,
            })
        (path / "record.json").write_text(json.dumps(manifest, indent=1))

    @classmethod
    def load(cls, path):
        path = Path(path)
        manifest = json.loads((path / "record.json").read_text())
        planes = []
        for m in manifest["planes"]:
            u, v = np.asarray(m["u"]), np.asarray(m["v"])
            raw = np.fromfile(path / m["file"], dtype="<c16")
            size = len(u) * len(v)
            if raw.size != 4 * size:
                raise ConfigurationError(f"{m['file']}: expected {4 * size} values, found {raw.size}")
            parts = [raw[i * size:(i + 1) * size].reshape(len(u), len(v), order="F") for i in range(4)]
            rule = m.get("rule", QUADRATURE_RULE)
            weights = np.outer(edge_weights(len(u), u[1] - u[0], rule), edge_weights(len(v), v[1] - v[0], rule))
            planes.append(SurfacePlane(m["axis"], m["side"], m["index"], m["coord"], tuple(m["tangential_axes"]),
                                       u, v, weights, np.stack(parts[:2]), np.stack(parts[2:]), rule=rule))
        return cls(planes, manifest["periods"], manifest["omega"])


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(1, 3) if x.ndim == 1 else x


def far_amplitude(record, directions, chunk=64):
    """Far-field amplitudes ``(f_u, f_d)`` (scattered wave ~ f e^{ir}/r) for unit direction(s).

    ``f(k) = -(1/4 pi) sum_S w exp(-i k.r') [dpsi/dn' + i (k.n') psi]``.
    """
    single = np.ndim(directions) == 1
    k = _as_points(directions)
    k = k / np.linalg.norm(k, axis=1, keepdims=True)
    out = np.zeros((2, len(k)), dtype=complex)
    for start in range(0, len(k), chunk):
        kk = k[start:start + chunk]
        acc = np.zeros((2, len(kk)), dtype=complex)
        for p in record.planes:
            pts = p.points().reshape(-1, 3)
            w = p.weights.reshape(-1)
            phase = np.exp(-1j * (kk @ pts.T)) * w  # (K, P)
            kn = kk[:, p.axis] * p.side  # (K,)
            psi = p.psi.reshape(2, -1)
            dn = p.dpsi_dn.reshape(2, -1)
            acc += dn @ phase.T + 1j * kn[None, :] * (psi @ phase.T)
        out[:, start:start + chunk] = -acc / FOUR_PI
    return (out[0, 0], out[1, 0]) if single else (out[0], out[1])


def exterior_field(record, points, chunk=16):
    """Scattered spinor ``(psi_u, psi_d)`` at point(s) outside the virtual box.

    ``psi(r) = sum_S w [psi dG/dn' - G dpsi/dn']``, ``G = e^{i|r-r'|} / (4 pi |r-r'|)``.
    """
    single = np.ndim(points) == 1
    r = _as_points(points)
    lo, hi = record.bounds
    inside = np.all((r >= lo) & (r <= hi), axis=1)
    if inside.any():
        raise DomainError(f"evaluation point {r[np.argmax(inside)]} lies inside the virtual surface box")
    out = np.zeros((2, len(r)), dtype=complex)
    for start in range(0, len(r), chunk):
        rr = r[start:start + chunk]
        acc = np.zeros((2, len(rr)), dtype=complex)
        for p in record.planes:
            pts = p.points().reshape(-1, 3)
            w = p.weights.reshape(-1)
            diff = rr[:, None, :] - pts[None, :, :]  # r - r'
            R = np.sqrt((diff ** 2).sum(-1))
            G = np.exp(1j * R) / (FOUR_PI * R)
            # dG/dn' = n'.grad' G = -(n'.(r-r')/R) (i - 1/R) G
            dG = -(p.side * diff[..., p.axis] / R) * (1j - 1.0 / R) * G
            psi = p.psi.reshape(2, -1)
            dn = p.dpsi_dn.reshape(2, -1)
            acc += psi @ (dG * w).T - dn @ (G * w).T
        out[:, start:start + chunk] = acc
    return (out[0, 0], out[1, 0]) if single else (out[0], out[1])


def point_source(center=(0.0, 0.0, 0.0), spin=(1.0, 0.0)):
    """Analytic outgoing point source ``e^{iR}/(4 pi R)`` (per-spin weights) for record synthesis."""
    c = np.asarray(center, dtype=float)
    s = np.asarray(spin, dtype=complex)

    def func(points):
        d = points - c
        R = np.sqrt((d ** 2).sum(-1))
        phi = np.exp(1j * R) / (FOUR_PI * R)
        grad = (d / R[..., None]) * ((1j - 1.0 / R) * phi)[..., None]
        return s[:, None, None] * phi, s[:, None, None, None] * grad

    return func
