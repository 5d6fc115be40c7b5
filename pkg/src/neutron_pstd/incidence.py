"""Incident spinor plane waves (monochromatic with a switch-on ramp, or a Gaussian pulse)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_LABELS = {
    "z+": (1.0, 0.0),
    "z-": (0.0, 1.0),
    "x+": (_INV_SQRT2, _INV_SQRT2),
    "x-": (_INV_SQRT2, -_INV_SQRT2),
    "y+": (_INV_SQRT2, 1j * _INV_SQRT2),
    "y-": (_INV_SQRT2, -1j * _INV_SQRT2),
}


@dataclass(frozen=True)
class SpinState:
    su: complex
    sd: complex

    def __post_init__(self):
        object.__setattr__(self, "su", complex(self.su))
        object.__setattr__(self, "sd", complex(self.sd))
        norm = abs(self.su) ** 2 + abs(self.sd) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"spin state must be normalized, |su|^2+|sd|^2 = {norm}")

    @property
    def vector(self):
        return np.array([self.su, self.sd])


def spin_state(label=None, theta=None, phi=0.0):
    """Named state (``"z+"``, ``"x-"``, ...) or the Bloch-sphere state at polar ``theta``, azimuth ``phi``."""
    if label is not None:
        if isinstance(label, SpinState):
            return label
        try:
            return SpinState(*_LABELS[str(label).strip().lower()])
        except KeyError:
            raise DomainError(f"unknown spin label {label!r}; expected one of {sorted(_LABELS)}") from None
    if theta is None:
        raise DomainError("give either a label or Bloch angles")
    return SpinState(math.cos(theta / 2.0), complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2.0))


def ramp(tau, periods):
    """Raised-cosine switch-on over ``periods`` carrier periods; returns ``(g, dg/dtau)``."""
    tau = np.asarray(tau, dtype=float)
    if periods <= 0:
        g = (tau >= 0).astype(float)
        return g, np.zeros_like(g)
    T = 2.0 * np.pi * periods
    s = np.clip(tau / T, 0.0, 1.0)
    g = 0.5 * (1.0 - np.cos(np.pi * s))
    dg = np.where((tau > 0) & (tau < T), 0.5 * np.pi / T * np.sin(np.pi * s), 0.0)
    return g, dg


@dataclass(frozen=True)
class IncidentSpec:
    """Incident plane wave along ``direction`` with carrier wavenumber 1.

    ``profile`` is ``"monochromatic"`` or ``"gaussian"``; for the pulse,
    ``width`` is the initial envelope width sigma0 and ``offset`` the position
    of the envelope peak along the direction at tau = 0.
    """

    direction: tuple = (0.0, 1.0, 0.0)
    spin: SpinState = SpinState(1.0, 0.0)
    profile: str = "monochromatic"
    width: float = math.inf
    offset: float = 0.0
    ramp_periods: float = 5.0

    def __post_init__(self):
        k = tuple(float(v) for v in self.direction)
        object.__setattr__(self, "direction", k)
        if len(k) != 3 or abs(math.sqrt(sum(v * v for v in k)) - 1.0) > 1e-12:
            raise DomainError(f"direction must be a unit 3-vector, got {k}")
        if self.profile not in ("monochromatic", "gaussian"):
            raise DomainError(f"unknown incident profile {self.profile!r}")
        if self.profile == "gaussian" and not self.width > 0:
            raise DomainError(f"gaussian width must be positive, got {self.width}")
        if not self.ramp_periods >= 0:
            raise DomainError(f"ramp_periods must be non-negative, got {self.ramp_periods}")

    @property
    def ramp_time(self):
        return 2.0 * np.pi * self.ramp_periods if self.profile == "monochromatic" else 0.0


def scalar_envelope(spec, xi, tau):
    """Scalar wave ``phi(xi, tau)`` along the propagation coordinate and its derivative ``d phi / d xi``."""
    xi = np.asarray(xi, dtype=float)
    carrier = np.exp(1j * (xi - tau))
    if spec.profile == "monochromatic":
        g, _ = ramp(tau, spec.ramp_periods)
        phi = g * carrier
        return phi, 1j * phi
    # free Gaussian packet: centre moves at group velocity 2, width spreads
    s2 = spec.width ** 2
    A = 1.0 + 2j * tau / s2
    u = xi - spec.offset - 2.0 * tau
    env = np.exp(-u * u / (2.0 * s2 * A)) / np.sqrt(A)
    phi = env * carrier
    return phi, phi * (1j - u / (s2 * A))


def incident_value(spec, r, tau):
    """Incident spinor and gradients at point(s) ``r`` (shape ``(..., 3)``).

    Returns ``(psi_u, psi_d, grad_u, grad_d)`` with gradients shaped ``(..., 3)``.
    """
    r = np.asarray(r, dtype=float)
    k = np.asarray(spec.direction)
    phi, dphi = scalar_envelope(spec, r @ k, tau)
    grad = dphi[..., None] * k
    return spec.spin.su * phi, spec.spin.sd * phi, spec.spin.su * grad, spec.spin.sd * grad
