"""First Born approximation for the cut-off uniformly magnetized sphere.

Amplitudes are dimensionless (in units of the reduced wavelength) and
defined by ``psi_scat ~ f e^{ir}/r`` for a unit-amplitude incident spinor,
i.e. ``f = -(1/4 pi) [integral e^{-i q.r} sigma.u(r) d^3r] s``.

The closed form is evaluated in the frame where the magnetization is the
z-axis; :func:`frame_rotation` and :func:`to_lab_frame` carry it to a frame
with the magnetization along any other axis (y by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from .errors import DomainError, QuadratureError
from .incidence import SpinState
from .magnetics import SphereFieldSpec, _sphere_components

SIGMA = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)

_SERIES_LIMIT = 0.1
# Taylor coefficients (-1)^k (2k+2)/(2k+3)!, enough for 1e-16 below the limit
_SERIES = [(-1) ** k * (2 * k + 2) / math.factorial(2 * k + 3) for k in range(5)]


def F(rho):
    """``sin(rho)/rho^3 - cos(rho)/rho^2``; F(0) = 1/3, F(inf) = 0."""
    rho = np.asarray(rho, dtype=float)
    out = np.empty_like(rho)
    small = rho < _SERIES_LIMIT
    r2 = rho[small] ** 2
    out[small] = np.polynomial.polynomial.polyval(r2, _SERIES)
    big = ~small & np.isfinite(rho)
    rb = rho[big]
    out[big] = np.sin(rb) / rb ** 3 - np.cos(rb) / rb ** 2
    out[np.isinf(rho)] = 0.0
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BornParams:
    """``strength_ratio`` = V0/E0, ``radius`` = a/lambda_bar0, ``cutoff_ratio`` = b/a (may be inf)."""

    strength_ratio: float
    radius: float
    cutoff_ratio: float = 8.175

    def __post_init__(self):
        if not (self.strength_ratio >= 0 and self.radius > 0):
            raise DomainError("strength_ratio must be >= 0 and radius > 0")
        if not self.cutoff_ratio >= 1:
            raise DomainError(f"cutoff_ratio must be >= 1, got {self.cutoff_ratio}")

    @property
    def cutoff_radius(self):
        return self.radius * self.cutoff_ratio

    def field_spec(self, axis=(0.0, 0.0, 1.0)):
        return SphereFieldSpec(self.strength_ratio, self.radius, self.cutoff_ratio, tuple(axis))


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not n > 0:
        raise DomainError(f"zero vector {v}")
    return v / n


@dataclass(frozen=True)
class ScatterGeometry:
    """Incident and outgoing unit directions; ``q = k_out - k_in`` with carrier wavenumber 1."""

    k_in: tuple
    k_out: tuple

    def __post_init__(self):
        for name in ("k_in", "k_out"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise DomainError(f"{name} must be a unit 3-vector, got {v}")
            object.__setattr__(self, name, tuple(v))

    @classmethod
    def from_q(cls, q):
        """Some geometry realizing the momentum transfer ``q`` (|q| <= 2)."""
        q = np.asarray(q, dtype=float)
        qn = np.linalg.norm(q)
        if qn > 2.0 + 1e-12:
            raise DomainError(f"|q| = {qn} exceeds 2")
        qn = min(qn, 2.0)
        e3 = q / qn if qn > 0 else np.array([0.0, 0.0, 1.0])
        e1, _ = _perp_basis(e3)
        p = math.sqrt(max(0.0, 1.0 - qn * qn / 4.0)) * e1
        k_in, k_out = -q / 2 + p, q / 2 + p
        return cls(tuple(k_in / np.linalg.norm(k_in)), tuple(k_out / np.linalg.norm(k_out)))

    @classmethod
    def from_q_angles(cls, q, theta, phi):
        return cls.from_q(q * np.array([math.sin(theta) * math.cos(phi),
                                        math.sin(theta) * math.sin(phi), math.cos(theta)]))

    @property
    def q(self):
        return np.asarray(self.k_out) - np.asarray(self.k_in)

    @property
    def q_norm(self):
        return float(np.linalg.norm(self.q))

    @property
    def q_angles(self):
        """Polar and azimuth angles of q (measured from the frame's z-axis)."""
        qx, qy, qz = self.q
        return math.atan2(math.hypot(qx, qy), qz), math.atan2(qy, qx)


def _perp_basis(e3):
    trial = np.array([1.0, 0.0, 0.0]) if abs(e3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = trial - e3 * (trial @ e3)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(e3, e1)


def _spinor(spin_in):
    if isinstance(spin_in, SpinState):
        return spin_in.vector
    return np.asarray(spin_in, dtype=complex)


def born_matrix(params, q):
    """2x2 matrix ``M`` with ``f = M s`` for momentum transfer ``q`` (magnetization along z).

    ``M = -(V0/E0) a^3 {[F(qa) - F(qb)] (sigma_z - qz_hat sigma.q_hat) + (2/3) F(qb) sigma_z}``,
    the entrywise form of the closed-form result, kept as a product so that
    ``F(qa) = F(qb)`` and ``q = 0`` need no special casing.
    """
    q = np.asarray(q, dtype=float)
    qn = float(np.linalg.norm(q))
    a = params.radius
    fa = F(qn * a)
    fb = F(qn * params.cutoff_radius) if math.isfinite(params.cutoff_ratio) else 0.0
    qh = q / qn if qn > 0 else np.array([0.0, 0.0, 1.0])
    qx, qy, qz = qh
    perp = qx * qx + qy * qy
    diag = (fa - fb) * perp + 2.0 / 3.0 * fb
    off = (fa - fb) * qz
    pref = params.strength_ratio * a ** 3
    return pref * np.array([[-diag, off * (qx - 1j * qy)],
                            [off * (qx + 1j * qy), diag]])


def born_amplitude(params, geom, spin_in):
    """Closed-form Born amplitudes ``(f_u, f_d)`` in the frame with the magnetization along z."""
    f = born_matrix(params, geom.q) @ _spinor(spin_in)
    return complex(f[0]), complex(f[1])


def frame_rotation(from_axis=(0.0, 0.0, 1.0), to_axis=(0.0, 1.0, 0.0)):
    """Proper rotation ``R`` taking ``from_axis`` to ``to_axis`` and its spin-1/2 matrix ``D``.

    ``D (sigma.v) D^dag = sigma.(R v)``. The rotation is about ``from x to``
    (about x for the default z -> y, i.e. -90 degrees about x).
    """
    a, b = _unit(from_axis), _unit(to_axis)
    axis = np.cross(a, b)
    s, c = np.linalg.norm(axis), float(a @ b)
    if s < 1e-15:
        if c > 0:
            return np.eye(3), np.eye(2, dtype=complex)
        axis, _ = _perp_basis(a)
        angle = math.pi
    else:
        axis = axis / s
        angle = math.atan2(s, c)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    R = np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K
    D = math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * np.einsum("i,ijk->jk", axis, SIGMA)
    return R, D


def to_lab_frame(matrix, rotation=None):
    """Carry an amplitude matrix from the z-magnetized frame into the lab frame: ``D M D^dag``."""
    R, D = rotation if rotation is not None else frame_rotation()
    return D @ matrix @ D.conj().T


def born_lab(params, k_in, k_out, spin_in, magnetization_axis=(0.0, 1.0, 0.0)):
    """Closed-form amplitudes in a frame where the magnetization points along ``magnetization_axis``."""
    R, D = frame_rotation((0.0, 0.0, 1.0), magnetization_axis)
    q_lab = _unit(k_out) - _unit(k_in)
    M = to_lab_frame(born_matrix(params, R.T @ q_lab), (R, D))
    f = M @ _spinor(spin_in)
    return complex(f[0]), complex(f[1])


def born_lab_matrix(params, q_lab, magnetization_axis=(0.0, 1.0, 0.0)):
    R, D = frame_rotation((0.0, 0.0, 1.0), magnetization_axis)
    return to_lab_frame(born_matrix(params, R.T @ np.asarray(q_lab, dtype=float)), (R, D))


# -- numerical oracle -----------------------------------------------------------

def field_transform(params, q, axis=(0.0, 0.0, 1.0), rtol=1e-8, n_phi=8):
    """``integral e^{-i q.r} u(r) d^3r`` by quadrature, in spherical coordinates aligned with q.

    The polar-angle integral uses Gauss-Legendre sized to the local phase
    ``|q| r``, the azimuth a trapezoid rule (exact for the quadratic angular
    dependence of the field) and the radius adaptive ``quad_vec`` on the
    interior and shell branches separately.
    """
    if not math.isfinite(params.cutoff_ratio):
        raise DomainError("quadrature needs a finite cutoff")
    spec = SphereFieldSpec(max(params.strength_ratio, 1e-300), params.radius, params.cutoff_ratio, tuple(axis))
    if params.strength_ratio == 0:
        return np.zeros(3, dtype=complex)
    q = np.asarray(q, dtype=float)
    qn = float(np.linalg.norm(q))
    e3 = q / qn if qn > 0 else np.array([0.0, 0.0, 1.0])
    e1, e2 = _perp_basis(e3)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    cphi, sphi = np.cos(phi), np.sin(phi)

    def angular(r):
        n_mu = int(0.75 * qn * r) + 32
        mu, wmu = np.polynomial.legendre.leggauss(n_mu)
        st = np.sqrt(1.0 - mu * mu)
        pts = r * (st[:, None, None] * (cphi[None, :, None] * e1 + sphi[None, :, None] * e2)
                   + mu[:, None, None] * e3)
        ux, uy, uz = _sphere_components(pts[..., 0], pts[..., 1], pts[..., 2], spec)
        u = np.stack([ux, uy, uz], axis=-1)  # (mu, phi, 3)
        kern = np.exp(-1j * qn * r * mu) * wmu
        val = np.einsum("m,mpc->c", kern, u) * (2 * np.pi / n_phi) * r * r
        return np.concatenate([val.real, val.imag])

    a, b = params.radius, params.cutoff_radius
    total = np.zeros(6)
    for lo, hi in ((0.0, a), (a, b)):
        if hi <= lo:
            continue
        val, err = quad_vec(angular, lo, hi, epsrel=rtol, epsabs=1e-14 * a ** 3, limit=2000)
        scale = max(np.abs(val).max(), 1e-300)
        if err > max(100 * rtol * scale, 1e-12 * a ** 3):
            raise QuadratureError(f"radial quadrature on [{lo:g}, {hi:g}] reached only {err / scale:.2e}",
                                  achieved=err / scale)
        total += val
    return total[:3] + 1j * total[3:]


def born_quadrature(params, geom, spin_in, axis=(0.0, 0.0, 1.0), rtol=1e-8):
    """Born amplitudes by direct numerical integration of the field (the closed form's oracle).

    ``axis`` is the magnetization direction in the frame of ``geom``.
    """
    ut = field_transform(params, geom.q, axis, rtol)
    M = -np.einsum("c,cij->ij", ut, SIGMA) / (4 * np.pi)
    f = M @ _spinor(spin_in)
    return complex(f[0]), complex(f[1])
