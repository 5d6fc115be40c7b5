import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neutron_pstd.errors import ConfigurationError, DomainError
from neutron_pstd.scaling import (ABC, SF, TF, TRANSITION, GridSpec, SpinorLattice, build_layout,
                                  make_scaling)

# sqrt(2 m_n E0)/hbar at 25 meV, evaluated with mpmath (40 digits): CODATA 2018 m_n, exact SI h and e
K0_25MEV = 3.473457941784755138
OMEGA0_1MEV = 1519267447878.626201


def test_thermal_neutron_wavenumber():
    ctx = make_scaling(25.0)
    assert ctx.k0 == pytest.approx(K0_25MEV, rel=1e-12)
    assert ctx.k0 * ctx.lambda_bar0 == 1.0


def test_unit_wavenumber_energy_gives_unit_reduced_wavelength():
    # energy with k0 = 1/Angstrom follows from the 25 meV value by k0^2 scaling
    ctx = make_scaling(25.0 / K0_25MEV ** 2)
    assert ctx.lambda_bar0 == pytest.approx(1.0, rel=1e-12)


def test_reference_frequency_is_energy_over_hbar():
    ctx = make_scaling(1.0)
    assert ctx.omega0 == pytest.approx(OMEGA0_1MEV, rel=1e-12)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_non_positive_energy_rejected(bad):
    with pytest.raises(DomainError):
        make_scaling(bad)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-6, 1e6))
def test_unit_round_trips(E0, value):
    ctx = make_scaling(E0)
    assert ctx.length_physical(ctx.length(value)) == pytest.approx(value, rel=1e-12)
    assert ctx.time(ctx.time_physical(value)) == pytest.approx(value, rel=1e-12)
    assert ctx.energy(ctx.energy_physical(value)) == pytest.approx(value, rel=1e-12)


def test_grid_is_cell_centred_and_symmetric():
    g = GridSpec.centered(16, 0.5)
    x = g.axis_coords(0)
    assert x[0] == -x[-1]
    assert np.all(x[:8] == -x[::-1][:8])
    assert g.coords()[0].shape == (16, 1, 1)


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        GridSpec.centered(4, 1.0)
    with pytest.raises(ConfigurationError):
        GridSpec.centered(16, 0.0)


def test_layout_example_box():
    lay = build_layout(GridSpec.centered(128, 1.0), {"abc": 12, "sf": 14, "transition": 8})
    assert lay.tf_box == ((34, 93),) * 3
    lo, hi = lay.surface_index[0]
    assert lay.sf_box[0][0] <= lo < lay.transition_box[0][0]


def test_paper_scale_layout_accepted():
    lay = build_layout((512, 320, 512), {"abc": 40, "sf": 41, "transition": 12})
    assert lay.tf_box[1] == (93, 226)


def test_layout_overflow_names_axis():
    with pytest.raises(ConfigurationError, match="axis y"):
        build_layout((64, 40, 64), {"abc": 8, "sf": 6, "transition": 6})


def test_layout_rejects_zero_width():
    with pytest.raises(ConfigurationError):
        build_layout((64, 64, 64), {"abc": 0, "sf": 6, "transition": 6})


@settings(max_examples=30, deadline=None)
@given(st.integers(26, 48), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_layout_partitions_the_grid(n, a, s, t):
    lay = build_layout((n, n + 2, n + 4), {"abc": a, "sf": s, "transition": t})
    labels = lay.labels()
    counts = [np.count_nonzero(labels == c) for c in (TF, TRANSITION, SF, ABC)]
    assert sum(counts) == labels.size
    assert all(c > 0 for c in counts)


def test_spinor_lattice_shapes():
    psi = SpinorLattice.zeros((8, 8, 8))
    assert psi.up.shape == psi.down.shape == (8, 8, 8)
    assert psi.norm() == 0.0
