import math

import numpy as np
import pytest

from neutron_pstd import analysis
from neutron_pstd.analysis import (CHANNELS, PlaneSweepSpec, SweepTable, born_source, compare, cross_section,
                                   euler_matrix, plane_sweep, read_table_csv, sweep_directions, write_table_csv)
from neutron_pstd.born import BornParams
from neutron_pstd.errors import ConfigurationError, DomainError
from neutron_pstd.incidence import spin_state

DESK = BornParams(0.05, math.pi, 6.0)


@pytest.mark.parametrize("plane,gamma,expected", [
    ("xy", 0, (1, 0, 0)), ("xy", 90, (0, 1, 0)), ("xy", 180, (-1, 0, 0)),
    ("yz", 0, (0, 0, -1)), ("yz", 90, (0, 1, 0)), ("yz", 180, (0, 0, 1)),
])
def test_named_plane_directions(plane, gamma, expected):
    a, b = analysis.PLANES[plane]
    assert np.allclose(sweep_directions(a, b, [gamma])[0], expected, atol=1e-15)


def test_euler_matrix_is_rotation(rng):
    for a, b, g in rng.uniform(-4, 4, size=(10, 3)):
        m = euler_matrix(a, b, g)
        assert np.abs(m.T @ m - np.eye(3)).max() < 1e-13
        assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-13)


def test_cross_section_examples():
    assert cross_section([0.3, 0.4j]) == pytest.approx(0.25)
    assert cross_section([0.3, 0.4j], "z+") == pytest.approx(0.09)
    assert cross_section([0.3, 0.4j], "z-") == pytest.approx(0.16)
    assert cross_section([1.0, 1.0], "x+") == pytest.approx(2.0)
    assert cross_section([1.0, -1.0], "x+") == pytest.approx(0.0, abs=1e-30)


def test_forward_mask():
    spec = PlaneSweepSpec.plane("xy", 5.0, forward_window_deg=15.0)
    masked = np.array(spec.gamma_deg)[spec.forward_mask()]
    assert masked.tolist() == [75.0, 80.0, 85.0, 90.0, 95.0, 100.0, 105.0]
    yz = PlaneSweepSpec.plane("yz", 5.0)
    assert sorted(np.array(yz.gamma_deg)[yz.forward_mask()].tolist()) == masked.tolist()


def test_mask_grows_with_window():
    counts = [PlaneSweepSpec.plane("xy", 1.0, forward_window_deg=w).forward_mask().sum() for w in (0, 5, 15, 40, 180)]
    assert counts == sorted(counts) and counts[-1] == 360


def test_sweep_validation():
    with pytest.raises(DomainError):
        PlaneSweepSpec.plane("xz")
    with pytest.raises(DomainError):
        PlaneSweepSpec(gamma_deg=(360.0,))
    with pytest.raises(DomainError):
        PlaneSweepSpec(incidence=(0, 2, 0))


def test_channel_completeness_and_sum():
    spec = PlaneSweepSpec.plane("yz", 10.0)
    t = plane_sweep(born_source(DESK), spec)
    assert set(t.dcs) == set(CHANNELS)
    for s in ("z+", "z-"):
        total = t.channel(s, "z+") + t.channel(s, "z-")
        assert np.allclose(total, t.channel(s, "x+") + t.channel(s, "x-"), rtol=1e-12, atol=0)
    assert np.allclose(t.channel("z+", "z-"), t.dcs["updown"], rtol=1e-13, atol=0)
    assert np.allclose(t.channel_sum, sum(t.dcs[c] for c in CHANNELS))


def test_born_xy_plane_non_flip_channels_vanish():
    t = plane_sweep(born_source(DESK), PlaneSweepSpec.plane("xy", 10.0))
    scale = t.dcs["updown"].max()
    assert scale > 0
    assert t.dcs["upup"].max() < 1e-20 * scale and t.dcs["downdown"].max() < 1e-20 * scale


def test_born_table_flip_symmetry():
    spec = PlaneSweepSpec.plane("yz", 3.0)
    dirs = spec.directions()
    t = plane_sweep(born_source(DESK), spec)
    src = born_source(DESK)

    def partner(d):
        return src(d)[:, :, 0]
    m = analysis.flip_partner_matrices(t.amplitudes[:, :, 0], dirs, partner)
    assert np.abs(m - t.amplitudes).max() <= 1e-13 * np.abs(t.amplitudes).max()


def test_xy_and_yz_planes_split_channels_differently():
    # both planes contain the magnetization, so only the channel split differs
    strong = BornParams(0.5, math.pi, 6.0)
    a = plane_sweep(born_source(strong), PlaneSweepSpec.plane("xy", 2.0))
    b = plane_sweep(born_source(strong), PlaneSweepSpec.plane("yz", 2.0))
    assert analysis.relative_l2(a.channel_sum, b.channel_sum) < 1e-12
    assert analysis.relative_l2(a.dcs["updown"], b.dcs["updown"]) > 1e-2
    assert b.dcs["upup"].max() > 1e-2 * b.dcs["updown"].max()


def test_scaling_law():
    spec = PlaneSweepSpec.plane("xy", 5.0)
    a = analysis.physical_born_params(25.0, 1.25, 9.045, 6.0)
    b = analysis.physical_born_params(25.0, 1.25, 9.045, 6.0)
    assert analysis.scaling_check(a, b, spec) == 0.0
    c = analysis.physical_born_params(50.0, 2.5, 9.045 / math.sqrt(2.0), 6.0)
    assert analysis.scaling_check(a, c, spec, rtol=1e-9) < 1e-9
    with pytest.raises(ConfigurationError):
        analysis.scaling_check(a, analysis.physical_born_params(50.0, 2.5, 9.045, 6.0), spec)


def test_strength_scaling_of_tables():
    spec = PlaneSweepSpec.plane("xy", 5.0)
    a = plane_sweep(born_source(BornParams(0.05, math.pi, 6.0)), spec)
    b = plane_sweep(born_source(BornParams(0.5, math.pi, 6.0)), spec)
    assert np.allclose(b.dcs["updown"], 100 * a.dcs["updown"], rtol=1e-12, atol=0)
    assert analysis.table_digest(a.scaled(100.0)) != analysis.table_digest(a)


def test_compare_identical_and_mismatched():
    spec = PlaneSweepSpec.plane("xy", 5.0)
    t = plane_sweep(born_source(DESK), spec)
    rep = compare(t, t, spec.forward_mask())
    assert all(v == 0.0 for v in rep.discrepancy.values())
    rep = compare(t.scaled(1.1), t, spec.forward_mask(), channels=("updown",))
    assert rep.discrepancy["updown"] == pytest.approx(0.1, rel=1e-12)
    other = plane_sweep(born_source(DESK), PlaneSweepSpec.plane("xy", 10.0))
    with pytest.raises(ConfigurationError):
        compare(t, other, spec.forward_mask())
    assert '"discrepancy"' in rep.to_json()


def test_compare_vanishing_reference_channels():
    spec = PlaneSweepSpec.plane("xy", 5.0)
    t = plane_sweep(born_source(DESK), spec)
    noisy = SweepTable(t.gamma_deg, {c: v.copy() for c, v in t.dcs.items()})
    noisy.dcs["upup"] += 1e-3 * t.dcs["updown"].max()
    rep = compare(noisy, t, spec.forward_mask())
    assert set(rep.metadata["normalized_by_largest"]) == {"upup", "downdown"}
    keep = ~spec.forward_mask()
    largest = np.linalg.norm(t.dcs["updown"][keep])
    expected = 1e-3 * t.dcs["updown"].max() * math.sqrt(keep.sum()) / largest
    assert rep.discrepancy["upup"] == pytest.approx(expected, rel=1e-9)
    assert rep.discrepancy["downdown"] == 0.0


def test_relative_l2_zero_reference():
    assert analysis.relative_l2([0, 0], [0, 0]) == 0.0
    assert analysis.relative_l2([1, 0], [0, 0]) == math.inf


def test_exceedance_window():
    spec = PlaneSweepSpec.plane("xy", 1.0)
    a = plane_sweep(born_source(BornParams(0.05, math.pi, 8.175)), spec)
    assert analysis.exceedance_window(a, a, spec, 0.0) == (0.0, 1.0)
    bump = SweepTable(a.gamma_deg, {c: v.copy() for c, v in a.dcs.items()})
    bump.dcs["upup"][90] += 1.0
    bump.dcs["upup"][100] += 1.0
    ang, frac = analysis.exceedance_window(bump, a, spec, 0.5)
    assert ang == pytest.approx(10.0) and frac == 1.0


def test_csv_round_trip_bitwise(tmp_path):
    t = plane_sweep(born_source(DESK), PlaneSweepSpec.plane("yz", 7.0))
    path = tmp_path / "t.csv"
    write_table_csv(path, t)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(analysis.CSV_COLUMNS)
    back = read_table_csv(path)
    assert np.array_equal(back.gamma_deg, t.gamma_deg)
    assert analysis.table_digest(back) == analysis.table_digest(t)


def test_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("gamma,upup\n0,1\n")
    with pytest.raises(ConfigurationError):
        read_table_csv(path)


def test_svg_output(tmp_path):
    spec = PlaneSweepSpec.plane("xy", 10.0)
    t = plane_sweep(born_source(DESK), spec)
    path = tmp_path / "p.svg"
    analysis.write_polar_svg(path, {"Born": t, "copy": t.scaled(0.5)}, channels=("updown", "channel_sum"), title="x")
    text = path.read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<polygon") == 4


def test_spin_state_channels_are_orthonormal():
    for a, b in (("z+", "z-"), ("x+", "x-"), ("y+", "y-")):
        sa, sb = spin_state(a).vector, spin_state(b).vector
        assert abs(np.vdot(sa, sb)) < 1e-15
        assert np.vdot(sa, sa).real == pytest.approx(1.0)
