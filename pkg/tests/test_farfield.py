import math

import numpy as np
import pytest

from neutron_pstd.errors import ConfigurationError, DomainError
from neutron_pstd.farfield import (SurfacePhasorRecord, accumulate_phasor, edge_weights, exterior_field,
                                   far_amplitude, point_source, spectral_derivative_row)
from neutron_pstd.scaling import GridSpec, SpinorLattice, build_layout

FOUR_PI = 4 * math.pi


@pytest.fixture(scope="module")
def box():
    # 10 cells per wavelength, virtual box about 5 wavelengths across
    g = GridSpec.centered(64, math.pi / 5)
    return g, build_layout(g, {"abc": 6, "sf": 6, "transition": 6})


def _fibonacci_directions(n):
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = math.pi * (1 + 5 ** 0.5) * i
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


@pytest.mark.parametrize("rule, order", [("trapezoid", 1), ("gregory", 3)])
def test_edge_weights_exactness(rule, order):
    x = np.linspace(0.0, 2.0, 21)
    w = edge_weights(21, 0.1, rule)
    for p in range(order + 1):
        assert w @ x ** p == pytest.approx(2.0 ** (p + 1) / (p + 1), rel=1e-12)


def test_spectral_derivative_row():
    n, h = 32, 2 * math.pi / 32
    x = np.arange(n) * h
    f = np.exp(2j * x)
    for i0 in (0, 5, 31):
        assert spectral_derivative_row(n, h, i0) @ f == pytest.approx(2j * f[i0], abs=1e-12)


def _stream(values, dt, n):
    for k in range(n):
        tau = k * dt
        yield tau, SpinorLattice(*values(tau))


def test_phasor_recovers_amplitude_and_rejects_harmonics(box):
    g, lay = box
    rng = np.random.default_rng(0)
    a = rng.normal(size=g.n) + 1j * rng.normal(size=g.n)
    dt = 2 * math.pi / 40
    rec_clean = accumulate_phasor(_stream(lambda t: (a * np.exp(-1j * t), 0 * a), dt, 80), g, lay, 2, dt)
    rec_dirty = accumulate_phasor(
        _stream(lambda t: (a * np.exp(-1j * t) + 3 * a * np.exp(-2j * t), 0 * a), dt, 80), g, lay, 2, dt)
    for p, q in zip(rec_clean.planes, rec_dirty.planes):
        assert np.abs(p.psi[0] - a[p.selector[1:]]).max() < 1e-10
        assert np.abs(q.psi[0] - p.psi[0]).max() < 1e-10


def test_phasor_preconditions(box):
    g, lay = box
    z = np.zeros(g.n)
    with pytest.raises(ConfigurationError):
        accumulate_phasor(_stream(lambda t: (z, z), 0.1, 10), g, lay, 0, 2 * math.pi / 40)
    with pytest.raises(ConfigurationError):
        accumulate_phasor(_stream(lambda t: (z, z), 0.1, 10), g, lay, 2, 0.1)
    with pytest.raises(ConfigurationError):
        accumulate_phasor(_stream(lambda t: (z, z), 0.1, 10), g, lay, 2, 2 * math.pi / 40)


def test_point_source_far_amplitude(box):
    g, lay = box
    rec = SurfacePhasorRecord.from_function(g, lay, point_source())
    fu, fd = far_amplitude(rec, _fibonacci_directions(100))
    assert np.abs(np.abs(fu) * FOUR_PI - 1).max() < 0.01
    assert np.abs(np.angle(fu)).max() < 0.02
    assert not np.any(fd)


def test_point_source_exterior_field(box):
    g, lay = box
    rec = SurfacePhasorRecord.from_function(g, lay, point_source(spin=(0.6, 0.8j)))
    dirs = _fibonacci_directions(40)
    pu, pd = exterior_field(rec, 100 * dirs)
    exact = np.exp(100j) / (FOUR_PI * 100)
    for got, s in ((pu, 0.6), (pd, 0.8j)):
        assert np.abs(np.abs(got / (s * exact)) - 1).max() < 0.01
        assert np.abs(np.angle(got / (s * exact))).max() < 0.02


def test_far_and_fresnel_agree_far_away(box):
    g, lay = box
    shifted = lambda pts: point_source(center=(0.7, -0.4, 0.3))(pts)
    rec = SurfacePhasorRecord.from_function(g, lay, shifted)
    dirs = _fibonacci_directions(20)
    r = 1e5
    fu, _ = far_amplitude(rec, dirs)
    pu, _ = exterior_field(rec, r * dirs)
    assert np.abs(r * np.exp(-1j * r) * pu - fu).max() <= 1e-3 * np.abs(fu).max()


def test_zero_record_and_inside_point(box):
    g, lay = box
    rec = SurfacePhasorRecord.from_function(g, lay, point_source()).zero_like()
    fu, fd = far_amplitude(rec, _fibonacci_directions(5))
    assert not np.any(fu) and not np.any(fd)
    pu, _ = exterior_field(rec, np.array([50.0, 0, 0]))
    assert pu == 0
    with pytest.raises(DomainError):
        exterior_field(rec, np.array([0.5, 0.0, 0.0]))


def test_spins_never_mix(box):
    g, lay = box
    rec = SurfacePhasorRecord.from_function(g, lay, point_source(spin=(1.0, 0.5)))
    only_up = rec.select_spin(0)
    fu, fd = far_amplitude(only_up, _fibonacci_directions(7))
    assert not np.any(fd)
    assert np.allclose(fu, far_amplitude(rec, _fibonacci_directions(7))[0], rtol=0, atol=0)


def test_record_round_trip(box, tmp_path):
    g, lay = box
    rec = SurfacePhasorRecord.from_function(g, lay, point_source(spin=(0.6, 0.8)))
    rec.save(tmp_path / "rec")
    back = SurfacePhasorRecord.load(tmp_path / "rec")
    for p, q in zip(rec.planes, back.planes):
        assert np.array_equal(p.psi, q.psi) and np.array_equal(p.dpsi_dn, q.dpsi_dn)
        assert np.array_equal(p.weights, q.weights)
    d = _fibonacci_directions(9)
    assert np.array_equal(far_amplitude(rec, d)[1], far_amplitude(back, d)[1])


def test_incomplete_record_rejected(box):
    g, lay = box
    rec = SurfacePhasorRecord.from_function(g, lay, point_source())
    with pytest.raises(ConfigurationError):
        SurfacePhasorRecord(rec.planes[:5])


def test_surface_plane_geometry_matches_layout(box):
    g, lay = box
    rec = SurfacePhasorRecord.from_function(g, lay, point_source())
    lo, hi = rec.bounds
    i0, i1 = lay.surface_index[0]
    assert lo[0] == g.axis_coords(0)[i0] and hi[0] == g.axis_coords(0)[i1]
