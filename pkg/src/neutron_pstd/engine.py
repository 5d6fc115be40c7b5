"""Pseudospectral time-domain marching of the two-component Schroedinger equation.

The update for each spin component is the three-level leapfrog

    psi[n+1] = Gamma * (psi[n-1] + 2 dt (K + P + I)[n])

with a spectral kinetic term K, the pointwise Pauli coupling P inside the
total-field core and the TF/SF injection term I on the transition layer
(plus, while a monochromatic wave is being switched on, the volume term that
makes the ramped wave an exact forced solution; see :func:`ramp_completion`).
"""

from __future__ import annotations

import json
import logging
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft
from scipy import special

from .errors import ConfigurationError, DivergenceError, SteadyStateTimeout
from .farfield import PhasorAccumulator, SurfacePhasorRecord, surface_planes
from .incidence import IncidentSpec, ramp
from .magnetics import DimensionlessPotential
from .scaling import REGION_NAMES, SF, GridSpec, RegionLayout, SpinorLattice, build_layout

log = logging.getLogger(__name__)

FFT_WORKERS = int(os.environ.get("NEUTRON_PSTD_WORKERS", os.cpu_count() or 1))


def max_stable_dt(grid, umax):
    """Sufficient leapfrog stability bound ``[pi^2 sum(1/d^2) + umax]^-1``."""
    if umax < 0:
        raise ValueError(f"umax must be non-negative, got {umax}")
    return 1.0 / (np.pi ** 2 * sum(1.0 / d ** 2 for d in grid.d) + umax)


def eta_factor(dt):
    """Phase-velocity correction sin(dt)/dt applied to the kinetic term."""
    return math.sin(dt) / dt if dt else 1.0


@dataclass
class AbcMask:
    """Separable absorbing mask ``Gamma = gx[i] gy[j] gz[k]``."""

    gx: np.ndarray
    gy: np.ndarray
    gz: np.ndarray
    U0: float
    alpha: float
    dt: float

    def lattice(self):
        return self.gx[:, None, None] * self.gy[None, :, None] * self.gz[None, None, :]


def abc_profile(n, U0, alpha, dt):
    i = np.arange(n)
    d = np.minimum(i, n - 1 - i)
    return np.exp(-U0 * dt / np.cosh(alpha * d) ** 2)


def abc_mask(layout, U0, alpha, dt):
    """Mask ``exp(-U0 dt / cosh^2(alpha d))``, d = cells to the nearer lattice edge.

    ``alpha`` is per cell.
    """
    if not (U0 > 0 and alpha > 0):
        raise ValueError(f"U0 and alpha must be positive, got U0={U0}, alpha={alpha}")
    g = [abc_profile(n, U0, alpha, dt) for n in layout.shape]
    return AbcMask(*g, U0=U0, alpha=alpha, dt=dt)


# smoothstep polynomials on [0, 1] with value, first and second derivative
_NAMED_ORDERS = {"quintic": 2, "septic": 3}


def smoothstep(order):
    """Smoothstep whose first ``order`` derivatives vanish at both ends: ``(S, S', S'')`` on [0, 1].

    ``S`` is the regularized incomplete beta function ``I_s(order+1, order+1)``,
    a polynomial of degree ``2 order + 1`` (order 2 is the quintic, 3 the septic).
    """
    if order < 2:
        raise ConfigurationError(f"smoothstep order must be >= 2 for a C2 taper, got {order}")
    c = 1.0 / special.beta(order + 1, order + 1)
    return (
        lambda s: special.betainc(order + 1, order + 1, s),
        lambda s: c * (s * (1 - s)) ** order,
        lambda s: c * order * (s * (1 - s)) ** (order - 1) * (1 - 2 * s),
    )


def profile_order(profile):
    """Order of a named taper profile: ``"quintic"``, ``"septic"`` or ``"smoothstep<N>"``."""
    name = str(profile).lower()
    if name in _NAMED_ORDERS:
        return _NAMED_ORDERS[name]
    m = re.fullmatch(r"smoothstep(\d+)", name)
    if m and int(m.group(1)) >= 2:
        return int(m.group(1))
    raise ConfigurationError(
        f"unknown taper profile {profile!r}; use 'quintic', 'septic' or 'smoothstepN' with N >= 2")


@dataclass
class TaperField:
    """Separable taper ``zeta = zx zy zz``; each entry is a tuple (value, d/dl, d2/dl2) of 1D arrays."""

    axes: tuple
    profile: str

    def zeta(self):
        (x, _, _), (y, _, _), (z, _, _) = self.axes
        return x[:, None, None] * y[None, :, None] * z[None, None, :]

    def gradient(self):
        (x, dx, _), (y, dy, _), (z, dz, _) = self.axes
        return (dx[:, None, None] * y[None, :, None] * z[None, None, :],
                x[:, None, None] * dy[None, :, None] * z[None, None, :],
                x[:, None, None] * y[None, :, None] * dz[None, None, :])

    def laplacian(self):
        (x, _, ddx), (y, _, ddy), (z, _, ddz) = self.axes
        return (ddx[:, None, None] * y[None, :, None] * z[None, None, :]
                + x[:, None, None] * ddy[None, :, None] * z[None, None, :]
                + x[:, None, None] * y[None, :, None] * ddz[None, None, :])


def taper_axis(n, lo, width, spacing, profile="quintic"):
    """1D taper rising over the ``width`` transition cells that start at index ``lo``."""
    f, df, d2f = smoothstep(profile_order(profile))
    i = np.arange(n, dtype=float)
    L = (width + 1) * spacing
    s_lo = (i - (lo - 1)) / (width + 1)
    s_hi = ((n - lo) - i) / (width + 1)
    s = np.clip(np.minimum(s_lo, s_hi), 0.0, 1.0)
    sign = np.where(s_lo <= s_hi, 1.0, -1.0)
    return f(s), sign * df(s) / L, d2f(s) / L ** 2


def taper_field(layout, grid, profile="quintic"):
    """Analytic C2 taper: 0 in SF and ABC, 1 in the TF core, smooth across the transition layer."""
    profile_order(profile)
    axes = []
    for a in range(3):
        if layout.transition[a] < 4:
            raise ConfigurationError(
                f"axis {'xyz'[a]}: transition layer needs at least 4 cells, got {layout.transition[a]}")
        lo = layout.transition_box[a][0]
        axes.append(taper_axis(layout.shape[a], lo, layout.transition[a], grid.d[a], profile))
    return TaperField(tuple(axes), profile)


def kinetic_multiplier(grid):
    """``kx^2 + ky^2 + kz^2`` on the FFT lattice (summing per-axis spectra is the same operator)."""
    kx, ky, kz = (grid.wavenumbers(a) ** 2 for a in range(3))
    return kx[:, None, None] + ky[None, :, None] + kz[None, None, :]


def kinetic_increment(psi, grid, eta, workers=None):
    """``K = -i eta sum_l IFFT_l[k_l^2 FFT_l[psi]]`` for both spin components."""
    spec = sfft.fftn(psi.data, axes=(1, 2, 3), workers=workers or FFT_WORKERS)
    spec *= kinetic_multiplier(grid)
    out = sfft.ifftn(spec, axes=(1, 2, 3), overwrite_x=True, workers=workers or FFT_WORKERS)
    out *= -1j * eta
    return SpinorLattice(out)


def _pauli_apply(ux, uy, uz, up, down):
    # returns (-i sigma.u) (up, down)
    w = ux - 1j * uy
    pu = -1j * (uz * up + w * down)
    pd = -1j * (np.conj(w) * up - uz * down)
    return pu, pd


def potential_increment(psi, u):
    """Pointwise ``P = -i (sigma . u) psi``; non-zero only on the TF box."""
    out = SpinorLattice.zeros(psi.shape, dtype=psi.data.dtype)
    box = u.box
    pu, pd = _pauli_apply(u.ux, u.uy, u.uz, psi.up[box], psi.down[box])
    out.up[box] = pu
    out.down[box] = pd
    return out


def injection_pattern(spec, taper, grid, tau):
    """Scalar injection ``-i [lap(zeta) phi + 2 grad(zeta).grad(phi)]`` for the scalar incident wave ``phi``."""
    from .incidence import scalar_envelope

    x, y, z = grid.coords()
    k = spec.direction
    xi = k[0] * x + k[1] * y + k[2] * z
    phi, dphi = scalar_envelope(spec, xi, tau)
    gx, gy, gz = taper.gradient()
    kdotgrad = k[0] * gx + k[1] * gy + k[2] * gz
    return -1j * (taper.laplacian() * phi + 2.0 * kdotgrad * dphi)


def ramp_completion(spec, taper, grid, tau):
    """Volume term ``zeta g'(tau) e^{i(k.r - tau)}`` that the ramped plane wave needs.

    The ramped wave is not a free solution (its residual is ``g' e^{i(k.r - tau)}``),
    so without this term the switch-on leaks into the scattered-field region.
    It vanishes once the ramp is complete and for the Gaussian profile.
    """
    if spec.profile != "monochromatic":
        return SpinorLattice.zeros(grid.n)
    _, dg = ramp(tau, spec.ramp_periods)
    x, y, z = grid.coords()
    k = spec.direction
    s = taper.zeta() * (complex(dg) * np.exp(1j * (k[0] * x + k[1] * y + k[2] * z - tau)))
    return SpinorLattice(spec.spin.su * s, spec.spin.sd * s)


def injection_increment(spec, taper, grid, tau):
    """Injection term for both spin components; zero outside the transition layer."""
    s = injection_pattern(spec, taper, grid, tau)
    return SpinorLattice(spec.spin.su * s, spec.spin.sd * s)


@dataclass
class Diagnostics:
    reference_norm: float = 1.0
    divergence_factor: float = 10.0
    max_norm: float = 0.0
    max_norm_even: float = 0.0
    max_norm_odd: float = 0.0
    diverged: bool = False
    history: list = field(default_factory=list)  # (step, total, tf, sf)


@dataclass
class EngineState:
    """Leapfrog levels n-1 and n, the step index and the time increment."""

    psi_prev: SpinorLattice
    psi_curr: SpinorLattice
    step: int
    dt: float
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    live: list = None  # per-component "may be non-zero" flags maintained by the engine

    @property
    def tau(self):
        return self.step * self.dt

    @classmethod
    def quiescent(cls, shape, dt, dtype=np.complex128, reference_norm=1.0, divergence_factor=10.0):
        return cls(SpinorLattice.zeros(shape, dtype), SpinorLattice.zeros(shape, dtype), 0, dt,
                   Diagnostics(reference_norm=reference_norm, divergence_factor=divergence_factor))


class PstdEngine:
    """Holds the precomputed operators of one simulation and advances an :class:`EngineState`."""

    def __init__(self, grid, layout, potential=None, incident=None, dt=None, *, U0=5.0, alpha=0.1,
                 taper_profile="quintic", masks=True, allow_unstable=False, monitor_stride=10,
                 dtype=np.complex128, workers=None):
        self.grid = grid
        self.layout = layout
        self.potential = potential if potential is not None else DimensionlessPotential.zero(layout)
        self.incident = incident
        self.bound = max_stable_dt(grid, self.potential.umax)
        self.dt = float(dt) if dt is not None else 0.9 * self.bound
        if self.dt > self.bound and not allow_unstable:
            raise ConfigurationError(
                f"time step {self.dt:.6g} exceeds the stability bound {self.bound:.6g}")
        self.eta = eta_factor(self.dt)
        self.dtype = np.dtype(dtype)
        self.rdtype = np.finfo(self.dtype).dtype
        self.workers = workers or FFT_WORKERS
        self.monitor_stride = int(monitor_stride)
        self.k2 = kinetic_multiplier(grid).astype(self.rdtype)
        self.mask = abc_mask(layout, U0, alpha, self.dt) if masks else None
        self.gamma = self.mask.lattice().astype(self.rdtype) if masks else None
        self.taper = taper_field(layout, grid, taper_profile) if incident is not None else None
        self._pattern = None
        self._ramp_pattern = None
        self._tbox = layout.box_slices(layout.transition_box)
        if incident is not None and incident.profile == "monochromatic":
            # time dependence factors out: I(r, tau) = g(tau) exp(-i tau) * pattern(r)
            still = IncidentSpec(incident.direction, incident.spin, "monochromatic", ramp_periods=0.0)
            full = injection_pattern(still, self.taper, grid, 0.0)
            self._pattern = full[self._tbox].astype(self.dtype)
            x, y, z = grid.coords()
            k = incident.direction
            wave = np.exp(1j * (k[0] * x + k[1] * y + k[2] * z))
            self._ramp_pattern = (self.taper.zeta() * wave)[self._tbox].astype(self.dtype)
        u = self.potential
        self._u = (u.ux.astype(self.rdtype), u.uy.astype(self.rdtype), u.uz.astype(self.rdtype))
        self._sf_mask = layout.region_mask(SF)
        self._mixing = bool(np.any(u.ux) or np.any(u.uy)) if not u.is_zero else False

    # -- single operations -------------------------------------------------
    def injection(self, tau):
        """Injection lattices (up, down) restricted to the transition box, or None."""
        spec = self.incident
        if spec is None:
            return None
        if self._pattern is not None:
            g, _ = ramp(tau, spec.ramp_periods)
            s = complex(g) * complex(math.cos(tau), -math.sin(tau)) * self._pattern
        else:
            full = injection_pattern(spec, self.taper, self.grid, tau)
            s = full[self._tbox].astype(self.dtype)
        su, sd = spec.spin.su, spec.spin.sd
        return (su * s if su else None), (sd * s if sd else None)

    def reference_norm(self):
        """L2 norm of the fully switched-on ``zeta * psi_inc`` (unit-amplitude incident)."""
        if self.taper is None:
            return 1.0
        return float(np.sqrt((self.taper.zeta() ** 2).sum()))

    def _live_components(self, state):
        # a component that is zero on both levels, receives no injection and is not
        # coupled to a live partner stays exactly zero, so its transforms can be skipped
        live = state.live
        if live is None:
            live = [bool(np.any(state.psi_curr.data[c]) or np.any(state.psi_prev.data[c])) for c in (0, 1)]
        if self.incident is not None:
            live[0] = live[0] or self.incident.spin.su != 0
            live[1] = live[1] or self.incident.spin.sd != 0
        if self._mixing and (live[0] or live[1]):
            live = [True, True]
        state.live = live
        return live

    def step(self, state):
        """Advance ``state`` by one leapfrog step in place and return it."""
        dt2 = 2.0 * state.dt
        cur, prev = state.psi_curr.data, state.psi_prev.data
        live = self._live_components(state)
        # level n-1 is not needed after this step, so level n+1 is built in its buffer
        new = prev
        coef = -1j * self.eta * dt2
        for c in (0, 1):
            if not live[c]:
                continue  # dead components are zero on both levels already
            t = sfft.fftn(cur[c], workers=self.workers)
            t *= self.k2
            t = sfft.ifftn(t, overwrite_x=True, workers=self.workers)
            t *= coef
            new[c] += t
        if not self.potential.is_zero:
            box = self.potential.box
            pu, pd = _pauli_apply(*self._u, cur[0][box], cur[1][box])
            new[0][box] += dt2 * pu
            new[1][box] += dt2 * pd
        if self._pattern is not None:
            # fold ramp, carrier phase and spin weight into one scalar per component
            tau = state.tau
            g, dg = ramp(tau, self.incident.ramp_periods)
            carrier = dt2 * complex(math.cos(tau), -math.sin(tau))
            spin = self.incident.spin
            for c, w in ((0, spin.su), (1, spin.sd)):
                if w and g:
                    new[c][self._tbox] += (carrier * complex(g) * w) * self._pattern
                if w and dg:
                    new[c][self._tbox] += (carrier * complex(dg) * w) * self._ramp_pattern
        else:
            inj = self.injection(state.tau)
            if inj is not None:
                iu, idn = inj
                if iu is not None:
                    new[0][self._tbox] += dt2 * iu
                if idn is not None:
                    new[1][self._tbox] += dt2 * idn
        if self.gamma is not None:
            for c in (0, 1):
                if live[c]:
                    new[c] *= self.gamma
        state.psi_prev, state.psi_curr = state.psi_curr, state.psi_prev
        state.step += 1
        if self.monitor_stride and state.step % self.monitor_stride == 0:
            self.monitor(state)
        return state

    def monitor(self, state):
        """Update norms and the divergence flag; raise on non-finite values."""
        data = state.psi_curr.data
        total = float(np.sqrt(np.vdot(data, data).real))
        diag = state.diagnostics
        if not math.isfinite(total):
            raise DivergenceError(
                f"non-finite values at step {state.step} in region {self._first_bad_region(data)}",
                step=state.step, region=self._first_bad_region(data))
        tf = data[(slice(None),) + self.layout.tf_slices]
        tfn = float(np.sqrt(np.vdot(tf, tf).real))
        sfv = data[:, self._sf_mask]
        sfn = float(np.sqrt(np.vdot(sfv, sfv).real))
        diag.history.append((state.step, total, tfn, sfn))
        diag.max_norm = max(diag.max_norm, total)
        if state.step % 2:
            diag.max_norm_odd = max(diag.max_norm_odd, total)
        else:
            diag.max_norm_even = max(diag.max_norm_even, total)
        if total > diag.divergence_factor * diag.reference_norm:
            diag.diverged = True
        return total

    def _first_bad_region(self, data):
        bad = ~np.isfinite(data).all(axis=0)
        idx = np.argwhere(bad)
        if not len(idx):
            return "none"
        return REGION_NAMES[int(self.layout.labels()[tuple(idx[0])])]


def leapfrog_step(state, engine):
    """Functional spelling of :meth:`PstdEngine.step`."""
    return engine.step(state)


def free_bootstrap(psi0, grid, dt, eta=None):
    """Previous level for an initial-value run: exact backward step of the free discrete dynamics.

    Choosing ``psi[-1]`` this way puts ``psi0`` entirely on the physical
    leapfrog branch (no computational mode) when the potential vanishes.
    """
    eta = eta_factor(dt) if eta is None else eta
    x = np.clip(eta * dt * kinetic_multiplier(grid), -1.0, 1.0)
    theta = np.arcsin(x)
    spec = sfft.fftn(psi0.data, axes=(1, 2, 3))
    spec *= np.exp(1j * theta)
    return SpinorLattice(sfft.ifftn(spec, axes=(1, 2, 3)))


# -- orchestration -----------------------------------------------------------

@dataclass
class RunConfig:
    """Everything :func:`run` needs; quantities are dimensionless."""

    grid: GridSpec
    layout: RegionLayout
    incident: IncidentSpec
    potential: DimensionlessPotential = None
    safety: float = 0.9
    dt: float = None
    U0: float = 5.0
    alpha: float = 0.1
    taper_profile: str = "quintic"
    periods: int = 2
    steady_tol: float = 1e-5
    steady_floor: float = 1e-6
    min_periods: int = None
    warmup_periods: int = None
    max_steps: int = 200_000
    monitor_stride: int = 10
    divergence_factor: float = 1e3
    dtype: str = "complex128"
    allow_unstable: bool = False
    progress: bool = False


def steps_per_period(bound, safety=0.9):
    """Even number of steps per carrier period with ``dt <= safety * bound``."""
    n = math.ceil(2.0 * math.pi / (safety * bound))
    return n + (n % 2)


def resolve_dt(config, umax):
    bound = max_stable_dt(config.grid, umax)
    if config.dt is None:
        n = steps_per_period(bound, config.safety)
        return 2.0 * math.pi / n, n, bound
    n = 2.0 * math.pi / config.dt
    if abs(n - round(n)) > 1e-9 * n:
        raise ConfigurationError(
            f"dt = {config.dt!r} does not divide the carrier period 2*pi into an integer number of steps")
    if config.dt > bound and not config.allow_unstable:
        raise ConfigurationError(f"dt = {config.dt:.6g} exceeds the stability bound {bound:.6g}")
    return config.dt, int(round(n)), bound


def default_min_periods(config):
    """Switch-on plus the time for the slowest relevant path across the lattice at group velocity 2."""
    g, lay = config.grid, config.layout
    extent = math.sqrt(sum((n * d) ** 2 for n, d in zip(g.n, g.d)))
    t = config.incident.ramp_time + extent / 2.0
    return int(math.ceil(t / (2.0 * math.pi))) + 1


@dataclass
class RunResult:
    state: EngineState
    record: SurfacePhasorRecord
    phasor: SpinorLattice
    dt: float
    bound: float
    steps_per_period: int
    trace: list

    def __iter__(self):
        return iter((self.state, self.record))


def run(config, checkpoint=None):
    """March until the surface phasors settle, then accumulate ``config.periods`` periods.

    Returns a :class:`RunResult`, which unpacks as ``(state, record)``.
    """
    if config.periods < 2:
        raise ConfigurationError(f"need at least 2 accumulation periods, got {config.periods}")
    potential = config.potential if config.potential is not None else DimensionlessPotential.zero(config.layout)
    dt, nper, bound = resolve_dt(config, potential.umax)
    engine = PstdEngine(config.grid, config.layout, potential, config.incident, dt,
                        U0=config.U0, alpha=config.alpha, taper_profile=config.taper_profile,
                        allow_unstable=config.allow_unstable, monitor_stride=config.monitor_stride,
                        dtype=np.dtype(config.dtype))
    if checkpoint is not None:
        state = load_checkpoint(checkpoint, config.grid, config.layout)
        state.diagnostics.divergence_factor = config.divergence_factor
        state.diagnostics.reference_norm = engine.reference_norm()
    else:
        state = EngineState.quiescent(config.grid.n, dt, engine.dtype, engine.reference_norm(),
                                      config.divergence_factor)
    planes = surface_planes(config.grid, config.layout)
    min_periods = config.min_periods if config.min_periods is not None else default_min_periods(config)
    log.info("dt=%.6g (bound %.6g, %d steps/period), min periods %d", dt, bound, nper, min_periods)

    trace = []
    previous = None
    period = state.step // nper
    while True:
        if config.warmup_periods is not None and period >= config.warmup_periods:
            break
        if state.step + nper > config.max_steps:
            raise SteadyStateTimeout(
                f"surface phasors not steady after {state.step} steps (max_steps={config.max_steps})", trace)
        surf = PhasorAccumulator.surfaces(planes, dtype=engine.dtype)
        for _ in range(nper):
            _advance(engine, state)
            surf.add(state.psi_curr, state.tau)
        current = surf.values()
        period += 1
        if previous is not None:
            diff = math.sqrt(sum(np.vdot(c - p, c - p).real for c, p in zip(current, previous)))
            size = math.sqrt(sum(np.vdot(c, c).real for c in current))
            floor = config.steady_floor * math.sqrt(sum(c.size for c in current))
            rel = diff / max(size, floor)
            trace.append((period, state.step, rel))
            if config.progress:
                log.warning("period %d (step %d): relative surface change %.3e", period, state.step, rel)
            if config.warmup_periods is None and period >= min_periods and rel < config.steady_tol:
                break
        previous = current

    acc = PhasorAccumulator.lattice(config.grid.n, dtype=np.complex128)
    for _ in range(config.periods * nper):
        _advance(engine, state)
        acc.add(state.psi_curr, state.tau)
    phasor = acc.result()
    record = SurfacePhasorRecord.from_lattice(phasor, config.grid, config.layout, periods=config.periods)
    return RunResult(state, record, phasor, dt, bound, nper, trace)


def _advance(engine, state):
    engine.step(state)
    if state.diagnostics.diverged:
        raise DivergenceError(
            f"lattice norm exceeded {state.diagnostics.divergence_factor:g}x the reference at step {state.step}",
            step=state.step, region="all")


# -- checkpoints ---------------------------------------------------------------

def save_checkpoint(state, grid, layout, path):
    """Write ``psi_prev.bin`` / ``psi_curr.bin`` (complex128 LE, x fastest, up then down) and ``state.json``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for name, lat in (("psi_prev.bin", state.psi_prev), ("psi_curr.bin", state.psi_curr)):
        with open(path / name, "wb") as fh:
            for comp in (lat.up, lat.down):
                fh.write(np.asarray(comp, dtype="<c16").tobytes(order="F"))
    meta = {
        "format": "neutron-pstd-checkpoint/1",
        "grid": {"n": list(grid.n), "d": list(grid.d), "origin": list(grid.origin)},
        "layout": {"abc": list(layout.abc), "sf": list(layout.sf), "transition": list(layout.transition),
                   "surface_shift": layout.surface_shift},
        "step": state.step,
        "dt": state.dt,
        "dtype": "complex128",
        "byte_order": "little",
        "index_order": "x-fastest",
        "components": ["up", "down"],
    }
    (path / "state.json").write_text(json.dumps(meta, indent=2))


def load_checkpoint(path, grid=None, layout=None):
    path = Path(path)
    meta = json.loads((path / "state.json").read_text())
    g = GridSpec(**meta["grid"])
    if grid is not None and (tuple(grid.n) != g.n or not np.allclose(grid.d, g.d)):
        raise ConfigurationError(f"checkpoint grid {g} does not match the configured grid {grid}")
    lay = meta["layout"]
    ck_layout = build_layout(g, {k: lay[k] for k in ("abc", "sf", "transition")}, lay["surface_shift"])
    if layout is not None and (layout.abc, layout.sf, layout.transition) != (
            ck_layout.abc, ck_layout.sf, ck_layout.transition):
        raise ConfigurationError("checkpoint layout does not match the configured layout")
    levels = []
    for name in ("psi_prev.bin", "psi_curr.bin"):
        raw = np.fromfile(path / name, dtype="<c16")
        if raw.size != 2 * g.size:
            raise ConfigurationError(f"{name}: expected {2 * g.size} values, found {raw.size}")
        up = raw[:g.size].reshape(g.n, order="F")
        down = raw[g.size:].reshape(g.n, order="F")
        levels.append(SpinorLattice(up.astype(np.complex128), down.astype(np.complex128)))
    return EngineState(levels[0], levels[1], int(meta["step"]), float(meta["dt"]))
