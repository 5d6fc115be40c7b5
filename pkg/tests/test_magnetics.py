import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from neutron_pstd.errors import ConfigurationError, IngestionError
from neutron_pstd.magnetics import (VOXEL_HEADER, SphereFieldSpec, bake_potential, load_voxel_field,
                                    pauli_eigenbasis, pauli_matrix, save_voxel_field, sphere_field, zero_field)
from neutron_pstd.scaling import GridSpec, build_layout


def test_interior_field_is_uniform():
    spec = SphereFieldSpec(0.05, math.pi, 6.0)
    u = sphere_field(np.array([[0.0, 0, 0], [1.0, -0.5, 2.0]]), spec)
    assert np.allclose(u, [[0, 2 / 3 * 0.05, 0]] * 2, atol=0, rtol=1e-15)


def test_dipole_field_on_axis_and_equator():
    spec = SphereFieldSpec(1.0, 1.0, math.inf, (0, 0, 1))
    # on axis: (a/r)^3 (1 - 1/3) = 2/3 (a/r)^3; on the equator: -(1/3)(a/r)^3
    assert sphere_field(np.array([0, 0, 2.0]), spec)[2] == pytest.approx(2 / 3 / 8)
    assert sphere_field(np.array([2.0, 0, 0]), spec)[2] == pytest.approx(-1 / 3 / 8)


def test_hard_cutoff():
    spec = SphereFieldSpec(1.0, 1.0, 3.0)
    assert np.any(sphere_field(np.array([0, 2.999, 0]), spec) != 0)
    assert np.all(sphere_field(np.array([0, 3.001, 0]), spec) == 0)


def test_hermitian_pauli_matrix(rng):
    for u in rng.normal(size=(100, 3)):
        m = pauli_matrix(u)
        assert np.array_equal(m, m.conj().T)


def test_eigenbasis_reconstruction(rng):
    worst = 0.0
    for u in rng.normal(size=(1000, 3)):
        A, (lp, lm) = pauli_eigenbasis(u)
        rec = A @ np.diag([lp, lm]) @ A.conj().T
        worst = max(worst, np.abs(rec - pauli_matrix(u)).max())
        assert np.abs(A.conj().T @ A - np.eye(2)).max() < 1e-13
    assert worst < 1e-12


def test_eigenbasis_examples():
    A, lam = pauli_eigenbasis((0, 0, 1))
    assert np.array_equal(A, np.eye(2)) and lam == (1.0, -1.0)
    A, lam = pauli_eigenbasis((1, 0, 0))
    assert np.allclose(A[:, 0], [1 / math.sqrt(2), 1 / math.sqrt(2)])
    A, lam = pauli_eigenbasis((0, 0, 0))
    assert np.array_equal(A, np.eye(2)) and lam == (0.0, 0.0)


def test_eigenbasis_diagonalizes_random_magnitude(rng):
    u = rng.normal(size=3)
    u *= 0.7 / np.linalg.norm(u)
    A, lam = pauli_eigenbasis(u)
    d = A.conj().T @ pauli_matrix(u) @ A
    assert np.abs(d - np.diag([0.7, -0.7])).max() < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_axis_rotation_consistency(seed):
    rng = np.random.default_rng(seed)
    R = Rotation.random(random_state=seed).as_matrix()
    r = rng.normal(size=(20, 3)) * 4.0
    a = SphereFieldSpec(0.3, 1.5, 3.0, (0.0, 1.0, 0.0))
    b = SphereFieldSpec(0.3, 1.5, 3.0, tuple(R @ [0.0, 1.0, 0.0]))
    lhs = sphere_field(r, a) @ R.T
    rhs = sphere_field(r @ R.T, b)
    # shell membership can flip only for points within rounding of r = a or r = b
    assert np.abs(lhs - rhs).max() < 1e-12


def _desk(n=48, d=math.pi / 5):
    g = GridSpec.centered(n, d)
    return g, build_layout(g, {"abc": 4, "sf": 4, "transition": 4})


def test_bake_zero_sampler():
    g, lay = _desk()
    u = bake_potential(zero_field, g, lay)
    assert u.is_zero and u.umax == 0.0 and not np.any(u.ux)


def test_bake_sphere_support_and_maximum():
    g, lay = _desk()
    spec = SphereFieldSpec(0.05, math.pi, 1.5)
    u = bake_potential(spec.sampler(), g, lay)
    assert u.umax == pytest.approx(spec.interior_value, rel=1e-12)
    # dense off-lattice sampling: the interior value is the global maximum
    pts = np.random.default_rng(1).uniform(-3 * math.pi, 3 * math.pi, size=(200000, 3))
    assert np.linalg.norm(sphere_field(pts, spec), axis=1).max() <= spec.interior_value * (1 + 1e-12)
    # no baked sample outside the cutoff radius
    ux, uy, uz = u.full()
    x, y, z = g.coords()
    r = np.sqrt(x * x + y * y + z * z)
    nz = (ux != 0) | (uy != 0) | (uz != 0)
    assert np.count_nonzero(nz & (r > spec.cutoff_radius)) == 0


def test_bake_rejects_leaking_field():
    g, lay = _desk()
    with pytest.raises(ConfigurationError, match="outside the total-field box"):
        bake_potential(SphereFieldSpec(0.05, math.pi, 8.175).sampler(), g, lay)


def test_voxel_round_trip(tmp_path):
    spec = SphereFieldSpec(0.2, 2.0, 2.5)
    h = 0.1
    ax = np.arange(-60, 61) * h
    X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
    ux, uy, uz = spec.sampler()(X, Y, Z)
    path = tmp_path / "sphere.vox"
    save_voxel_field(path, ux, uy, uz, (h, h, h), (ax[0],) * 3)
    assert path.stat().st_size == VOXEL_HEADER.size + ux.size * 24
    sampler = load_voxel_field(path)
    # exact on voxel centres, O(h^2) in the smooth shell between them
    assert np.allclose(np.stack(sampler(X[::7, ::5, ::3], Y[::7, ::5, ::3], Z[::7, ::5, ::3])),
                       np.stack([ux[::7, ::5, ::3], uy[::7, ::5, ::3], uz[::7, ::5, ::3]]), atol=1e-14)
    pts = np.random.default_rng(3).normal(size=(300, 3))
    pts *= (3.0 + np.random.default_rng(4).uniform(0, 1.5, 300) / 1.0)[:, None] / np.linalg.norm(pts, axis=1)[:, None]
    pts = pts[np.linalg.norm(pts, axis=1) < 4.9]
    exact = sphere_field(pts, spec)
    got = np.stack(sampler(pts[:, 0], pts[:, 1], pts[:, 2]), axis=-1)
    assert np.abs(got - exact).max() < 5 * h ** 2 * spec.interior_value
    assert np.all(np.stack(sampler(np.array([7.0]), np.array([0.0]), np.array([0.0]))) == 0)


def test_empty_voxel_box_is_zero_field(tmp_path):
    path = tmp_path / "empty.vox"
    path.write_bytes(VOXEL_HEADER.pack(b"MAGVOX01", 0, 0, 0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0))
    f = load_voxel_field(path)
    assert np.all(np.stack(f(np.ones(3), np.ones(3), np.ones(3))) == 0)


def test_truncated_voxel_file_reports_offset(tmp_path):
    path = tmp_path / "bad.vox"
    save_voxel_field(path, *(np.ones((3, 3, 3)),) * 3, (1, 1, 1), (0, 0, 0))
    data = path.read_bytes()
    path.write_bytes(data[:-10])
    with pytest.raises(IngestionError, match="offset") as info:
        load_voxel_field(path)
    assert info.value.offset == len(data) - 10
    path.write_bytes(data[:30])
    with pytest.raises(IngestionError) as info:
        load_voxel_field(path)
    assert info.value.offset == 30


def test_malformed_voxel_files(tmp_path):
    path = tmp_path / "bad.vox"
    save_voxel_field(path, *(np.ones((2, 2, 2)),) * 3, (1, 1, 1), (0, 0, 0))
    data = bytearray(path.read_bytes())
    path.write_bytes(b"NOTMAGIC" + data[8:])
    with pytest.raises(IngestionError, match="magic"):
        load_voxel_field(path)
    data[VOXEL_HEADER.size + 8 * 5:VOXEL_HEADER.size + 8 * 6] = struct.pack("<d", math.nan)
    path.write_bytes(bytes(data))
    with pytest.raises(IngestionError) as info:
        load_voxel_field(path)
    assert info.value.offset == VOXEL_HEADER.size + 40
