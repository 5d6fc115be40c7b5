"""Cross sections, Euler-plane sweeps, PSTD/Born comparison and table I/O.

Amplitudes for the four basis channels are carried as 2x2 matrices
``M[out, in]`` so that the amplitude for an arbitrary incident spinor ``s``
is ``M s``. Channel names read incident spin first: ``updown`` is z+ -> z-.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .born import BornParams, born_lab_matrix
from .errors import ConfigurationError, DomainError
from .farfield import exterior_field, far_amplitude
from .incidence import SpinState, spin_state
from .scaling import make_scaling

CHANNELS = ("upup", "updown", "downup", "downdown")
_CHANNEL_INDEX = {"upup": (0, 0), "updown": (1, 0), "downup": (0, 1), "downdown": (1, 1)}  # (out, in)
CSV_COLUMNS = ("gamma_deg",) + tuple(f"dcs_{c}" for c in CHANNELS) + ("channel_sum",)

PLANES = {"xy": (0.0, 0.0), "yz": (0.0, 90.0)}

# 180 degree rotation about y: position map and its spin matrix (-i sigma_y)
FLIP_POSITION = np.diag([-1.0, 1.0, -1.0])
FLIP_SPIN = np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex)


def _spinor(s):
    return s.vector if isinstance(s, SpinState) else np.asarray(s, dtype=complex)


def cross_section(f, out_channel=None):
    """``|<out|f>|^2`` for amplitude spinor(s) ``f`` (last axis 2), or ``|fu|^2 + |fd|^2`` without a channel."""
    f = np.asarray(f, dtype=complex)
    if out_channel is None:
        return (np.abs(f) ** 2).sum(axis=-1)
    out = spin_state(out_channel) if isinstance(out_channel, str) else out_channel
    return np.abs(f @ np.conj(_spinor(out))) ** 2


# -- geometry -------------------------------------------------------------------

def _rz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(b):
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def euler_matrix(alpha, beta, gamma):
    """y-convention rotation ``Rz(alpha) Ry(beta) Rz(gamma)`` (radians)."""
    return _rz(alpha) @ _ry(beta) @ _rz(gamma)


def sweep_directions(alpha_deg, beta_deg, gamma_deg):
    """Outgoing unit vectors ``Rz(alpha) Ry(beta) Rz(gamma) x`` for an array of gamma (degrees)."""
    a, b = math.radians(alpha_deg), math.radians(beta_deg)
    g = np.radians(np.asarray(gamma_deg, dtype=float))
    plane = _rz(a) @ _ry(b)
    local = np.stack([np.cos(g), np.sin(g), np.zeros_like(g)], axis=-1)
    return local @ plane.T


@dataclass(frozen=True)
class PlaneSweepSpec:
    """Scattering plane ``(alpha, beta)`` and in-plane angles ``gamma`` (all degrees)."""

    alpha_deg: float = 0.0
    beta_deg: float = 0.0
    gamma_deg: tuple = tuple(float(g) for g in range(0, 360, 2))
    incidence: tuple = (0.0, 1.0, 0.0)
    forward_window_deg: float = 15.0

    def __post_init__(self):
        g = tuple(float(v) for v in self.gamma_deg)
        if any(not (0.0 <= v < 360.0) for v in g):
            raise DomainError("gamma samples must lie in [0, 360) degrees")
        object.__setattr__(self, "gamma_deg", g)
        k = np.asarray(self.incidence, dtype=float)
        if k.shape != (3,) or abs(np.linalg.norm(k) - 1.0) > 1e-12:
            raise DomainError(f"incidence must be a unit 3-vector, got {self.incidence}")
        object.__setattr__(self, "incidence", tuple(k))

    @classmethod
    def plane(cls, name, step_deg=2.0, **kw):
        try:
            alpha, beta = PLANES[name]
        except KeyError:
            raise DomainError(f"unknown plane {name!r}; expected one of {sorted(PLANES)}") from None
        return cls(alpha, beta, tuple(np.arange(0.0, 360.0, step_deg)), **kw)

    def directions(self):
        return sweep_directions(self.alpha_deg, self.beta_deg, self.gamma_deg)

    def forward_angle_deg(self):
        cosang = np.clip(self.directions() @ np.asarray(self.incidence), -1.0, 1.0)
        return np.degrees(np.arccos(cosang))

    def forward_mask(self):
        """True where the outgoing direction lies within the forward window (excluded from comparisons)."""
        return self.forward_angle_deg() <= self.forward_window_deg


@dataclass
class SweepTable:
    """Per-gamma channel cross sections, optionally with the amplitude matrices they came from."""

    gamma_deg: np.ndarray
    dcs: dict
    amplitudes: np.ndarray = None  # (n, 2, 2) as M[out, in]

    @classmethod
    def from_amplitudes(cls, gamma_deg, matrices):
        m = np.asarray(matrices, dtype=complex)
        dcs = {c: np.abs(m[:, o, i]) ** 2 for c, (o, i) in _CHANNEL_INDEX.items()}
        return cls(np.asarray(gamma_deg, dtype=float), dcs, m)

    @property
    def channel_sum(self):
        return sum(self.dcs[c] for c in CHANNELS)

    def channel(self, incident, outgoing):
        """Cross section for arbitrary incident and outgoing states, assembled from the basis amplitudes."""
        if self.amplitudes is None:
            raise DomainError("table carries no amplitudes; arbitrary channels need them")
        s_in = _spinor(spin_state(incident) if isinstance(incident, str) else incident)
        f = self.amplitudes @ s_in
        return cross_section(f, outgoing)

    def scaled(self, factor):
        amps = None if self.amplitudes is None else self.amplitudes * math.sqrt(factor)
        return SweepTable(self.gamma_deg.copy(), {c: v * factor for c, v in self.dcs.items()}, amps)


# -- amplitude sources ------------------------------------------------------------

def born_source(params, magnetization_axis=(0.0, 1.0, 0.0), incidence=(0.0, 1.0, 0.0)):
    """Amplitude-matrix source backed by the closed-form Born result."""
    k_in = np.asarray(incidence, dtype=float)

    def source(directions):
        return np.array([born_lab_matrix(params, d - k_in, magnetization_axis) for d in directions])

    return source


def flip_partner_matrices(column_up, directions, partner):
    """Down-incidence column from the up-incidence one via the 180 degree rotation about y.

    For magnetization and incidence along y the z- solution is the rotated z+
    solution: ``f^{z-}(k) = J f^{z+}(R k)`` with ``R = diag(-1, 1, -1)``,
    ``J = -i sigma_y``. ``partner`` evaluates the z+ amplitudes at rotated directions.
    """
    rotated = np.asarray(directions) @ FLIP_POSITION.T
    up_r = partner(rotated)
    m = np.empty((len(directions), 2, 2), dtype=complex)
    m[:, :, 0] = column_up
    m[:, :, 1] = up_r @ FLIP_SPIN.T
    return m


def _record_columns(evaluate, record_up, record_down, directions):
    fu, fd = evaluate(record_up, directions)
    col_up = np.stack([fu, fd], axis=-1)
    if record_down is not None:
        gu, gd = evaluate(record_down, directions)
        m = np.empty((len(directions), 2, 2), dtype=complex)
        m[:, :, 0] = col_up
        m[:, :, 1] = np.stack([gu, gd], axis=-1)
        return m

    def partner(dirs):
        a, b = evaluate(record_up, dirs)
        return np.stack([a, b], axis=-1)

    return flip_partner_matrices(col_up, directions, partner)


def pstd_source(record_up, record_down=None):
    """Far-field source from z+ and z- surface records; without ``record_down`` the flip map supplies it."""

    def source(directions):
        return _record_columns(far_amplitude, record_up, record_down, directions)

    return source


def fresnel_source(record_up, record_down=None, radius=100.0):
    """``r e^{-ir} psi(r k)``: the exterior field at finite radius on the far-field scale."""

    def evaluate(record, directions):
        pts = radius * np.asarray(directions)
        fu, fd = exterior_field(record, pts)
        phase = radius * np.exp(-1j * radius)
        return fu * phase, fd * phase

    def source(directions):
        return _record_columns(evaluate, record_up, record_down, directions)

    return source


def plane_sweep(source, spec):
    """Evaluate ``source`` (directions -> M[out, in] matrices) over the sweep's outgoing directions."""
    return SweepTable.from_amplitudes(spec.gamma_deg, source(spec.directions()))


# -- comparison ---------------------------------------------------------------------

@dataclass
class ComparisonReport:
    gamma_deg: np.ndarray
    pstd: dict
    born: dict
    masked: np.ndarray
    discrepancy: dict
    metadata: dict = field(default_factory=dict)

    @property
    def worst(self):
        return max(self.discrepancy.values())

    def to_json(self):
        return json.dumps({
            "gamma_deg": self.gamma_deg.tolist(),
            "masked": self.masked.tolist(),
            "discrepancy": self.discrepancy,
            "pstd": {c: v.tolist() for c, v in self.pstd.items()},
            "born": {c: v.tolist() for c, v in self.born.items()},
            "metadata": self.metadata,
        }, indent=2)


def relative_l2(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    nb = np.linalg.norm(b)
    if nb == 0:
        return 0.0 if np.linalg.norm(a) == 0 else math.inf
    return float(np.linalg.norm(a - b) / nb)


def compare(pstd_table, born_table, mask, channels=CHANNELS, metadata=None, zero_tol=1e-12):
    """Per-channel relative L2 discrepancy over the unmasked angles (``mask`` True = excluded).

    A channel whose reference norm is below ``zero_tol`` times the largest
    reference channel norm (e.g. the non-flip channels of the x-y plane in Born)
    is measured against that largest norm instead; such channels are listed in
    ``metadata["normalized_by_largest"]``.
    """
    if pstd_table.gamma_deg.shape != born_table.gamma_deg.shape or not np.array_equal(
            pstd_table.gamma_deg, born_table.gamma_deg):
        raise ConfigurationError("tables were evaluated on different sweeps")
    mask = np.asarray(mask, dtype=bool)
    keep = ~mask
    norms = {c: float(np.linalg.norm(born_table.dcs[c][keep])) for c in CHANNELS}
    largest = max(norms.values())
    disc, rescaled = {}, []
    for c in channels:
        a, b = pstd_table.dcs[c][keep], born_table.dcs[c][keep]
        if largest > 0 and norms[c] <= zero_tol * largest:
            disc[c] = float(np.linalg.norm(a - b) / largest)
            rescaled.append(c)
        else:
            disc[c] = relative_l2(a, b)
    meta = dict(metadata or {})
    meta["normalized_by_largest"] = rescaled
    return ComparisonReport(pstd_table.gamma_deg, dict(pstd_table.dcs), dict(born_table.dcs), mask, disc, meta)


def exceedance_window(table_a, table_b, spec, threshold, channel="channel_sum"):
    """Angular extent (degrees from incidence) of the angles where ``|a - b|`` exceeds ``threshold``.

    Returns ``(max_forward_angle, fraction_inside_forward_window)``; an empty
    exceedance set gives ``(0.0, 1.0)``.
    """
    va = table_a.channel_sum if channel == "channel_sum" else table_a.dcs[channel]
    vb = table_b.channel_sum if channel == "channel_sum" else table_b.dcs[channel]
    over = np.abs(va - vb) > threshold
    if not over.any():
        return 0.0, 1.0
    ang = spec.forward_angle_deg()
    return float(ang[over].max()), float(spec.forward_mask()[over].mean())


# -- scaling law ---------------------------------------------------------------------

def physical_born_params(E0_meV, V0_meV, radius_angstrom, cutoff_ratio):
    """Dimensionless Born parameters from physical inputs."""
    ctx = make_scaling(E0_meV)
    return BornParams(V0_meV / E0_meV, ctx.length(radius_angstrom), cutoff_ratio)


def scaling_check(params_a, params_b, spec, rtol=1e-12):
    """Born sweep tables for two parameter sets with equal ratios must coincide.

    Returns the largest relative difference over all channels.
    """
    for name in ("strength_ratio", "radius", "cutoff_ratio"):
        va, vb = getattr(params_a, name), getattr(params_b, name)
        if not (va == vb or abs(va - vb) <= rtol * max(abs(va), abs(vb))):
            raise ConfigurationError(f"configurations differ in the dimensionless {name}: {va} vs {vb}")
    ta = plane_sweep(born_source(params_a, incidence=spec.incidence), spec)
    tb = plane_sweep(born_source(params_b, incidence=spec.incidence), spec)
    scale = max(max(np.abs(ta.dcs[c]).max() for c in CHANNELS), 1e-300)
    return max(float(np.abs(ta.dcs[c] - tb.dcs[c]).max()) for c in CHANNELS) / scale


def table_digest(table):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(table.gamma_deg).tobytes())
    for c in CHANNELS:
        h.update(np.ascontiguousarray(table.dcs[c]).tobytes())
    return h.hexdigest()


# -- I/O ---------------------------------------------------------------------------

def write_table_csv(path, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        total = table.channel_sum
        for i, g in enumerate(table.gamma_deg):
            row = [g] + [table.dcs[c][i] for c in CHANNELS] + [total[i]]
            w.writerow([f"{v:.17g}" for v in row])


def read_table_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ConfigurationError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(CSV_COLUMNS))
    return SweepTable(data[:, 0], {c: data[:, i + 1] for i, c in enumerate(CHANNELS)})


_COLORS = {"upup": "#1f77b4", "updown": "#d62728", "downup": "#2ca02c", "downdown": "#9467bd",
           "channel_sum": "#333333"}


def write_polar_svg(path, tables, channels=("upup", "updown"), title="", size=480):
    """Polar plot of cross section versus gamma; ``tables`` maps a label to a :class:`SweepTable`.

    The radius is linear in the cross section, normalized to the largest plotted value.
    """
    c0 = size / 2.0
    rmax = 0.42 * size
    peak = 0.0
    for t in tables.values():
        for ch in channels:
            v = t.channel_sum if ch == "channel_sum" else t.dcs[ch]
            peak = max(peak, float(np.nanmax(v)) if len(v) else 0.0)
    peak = peak or 1.0
    dashes = ["", "6,3", "2,3", "8,3,2,3"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 40}" '
             f'viewBox="0 0 {size} {size + 40}" font-family="sans-serif" font-size="11">',
             f'<rect width="100%" height="100%" fill="white"/>',
             f'<text x="{c0}" y="16" text-anchor="middle" font-size="13">{title}</text>']
    for frac in (0.25, 0.5, 0.75, 1.0):
        parts.append(f'<circle cx="{c0}" cy="{c0 + 20}" r="{rmax * frac:.2f}" fill="none" stroke="#ccc"/>')
    for deg in range(0, 360, 30):
        x = c0 + rmax * math.cos(math.radians(deg))
        y = c0 + 20 - rmax * math.sin(math.radians(deg))
        parts.append(f'<line x1="{c0}" y1="{c0 + 20}" x2="{x:.2f}" y2="{y:.2f}" stroke="#eee"/>')
        parts.append(f'<text x="{c0 + 1.08 * (x - c0):.2f}" y="{c0 + 20 + 1.08 * (y - c0 - 20):.2f}" '
                     f'text-anchor="middle">{deg}</text>')
    legend_y = size + 30
    for k, (label, t) in enumerate(tables.items()):
        for j, ch in enumerate(channels):
            v = t.channel_sum if ch == "channel_sum" else t.dcs[ch]
            g = np.radians(t.gamma_deg)
            r = rmax * np.asarray(v) / peak
            pts = " ".join(f"{c0 + ri * math.cos(gi):.2f},{c0 + 20 - ri * math.sin(gi):.2f}"
                           for ri, gi in zip(r, g) if np.isfinite(ri))
            dash = dashes[k % len(dashes)]
            parts.append(f'<polygon points="{pts}" fill="none" stroke="{_COLORS.get(ch, "#000")}" '
                         f'stroke-width="1.3"' + (f' stroke-dasharray="{dash}"' if dash else "") + "/>")
        parts.append(f'<text x="{10 + 150 * k}" y="{legend_y}">{label} '
                     f'({"solid" if not dashes[k % 4] else "dashed " + str(k)})</text>')
    parts.append(f'<text x="{size - 10}" y="{legend_y - 14}" text-anchor="end">'
                 + ", ".join(channels) + f"; peak {peak:.3g}</text>")
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
