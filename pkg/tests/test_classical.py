import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nc_heat.classical import (
    GridField, GridModel, classical_sweep, critical_amplitude, evolve_classical, expand_box,
    gaussian_field, heat_apply_classical, lemma61_certificate_classical, refine_grid,
)
from nc_heat.errors import BoxTooSmall
from nc_heat.evolve import boundary_bracket

L, N = 40.0, 2048


@pytest.fixture(scope="module")
def bump():
    # asymmetric positive data: two Gaussians of different width
    g = gaussian_field(1, L, N, 1.0)
    shifted = np.roll(gaussian_field(1, L, N, 0.5, 0.3).values, 100)
    return GridField(1, L, N, g.values + shifted)


@pytest.mark.parametrize("d,n", [(1, 2048), (2, 256)])
def test_heat_maps_gaussian_to_gaussian(d, n):
    out = heat_apply_classical(gaussian_field(d, L, n, 1.0), 2.0)
    ref = gaussian_field(d, L, n, 3.0)
    assert np.abs(out.values - ref.values).max() <= 1e-12 * ref.values.max()


def test_semigroup(bump):
    two = heat_apply_classical(heat_apply_classical(bump, 1.0), 1.0)
    once = heat_apply_classical(bump, 2.0)
    assert np.abs(two.values - once.values).max() <= 1e-8 * once.values.max()


@pytest.mark.parametrize("t", [0.1, 1.0, 3.0])
def test_mass_conservation(bump, t):
    assert heat_apply_classical(bump, t).mass() == pytest.approx(bump.mass(), rel=1e-12)


@pytest.mark.parametrize("t", [0.5, 1.5, 3.0])
def test_smoothing_bound(bump, t):
    out = heat_apply_classical(bump, t)
    assert out.values.max() <= (4 * math.pi * t) ** -0.5 * bump.mass() * (1 + 1e-12)


@settings(max_examples=20, deadline=None)
@given(shift=st.integers(-100, 100), t=st.floats(0.05, 2.0))
def test_shift_equivariance(bump, shift, t):
    moved = GridField(1, L, N, np.roll(bump.values, shift))
    a = heat_apply_classical(moved, t).values
    b = np.roll(heat_apply_classical(bump, t).values, shift)
    assert np.abs(a - b).max() <= 1e-12 * np.abs(b).max()


@pytest.mark.parametrize("d,n", [(1, 512), (2, 64)])
def test_refine_matches_fine_sampling(d, n):
    fine = refine_grid(gaussian_field(d, 20.0, n, 1.0))
    ref = gaussian_field(d, 20.0, 2 * n, 1.0)
    assert fine.n == 2 * n
    assert np.abs(fine.values - ref.values).max() <= 1e-10 * ref.values.max()


def test_refine_rejects_odd_grid():
    with pytest.raises(ValueError):
        refine_grid(gaussian_field(1, 10.0, 33, 1.0))


def test_expand_coarsens_resolved_data():
    g = gaussian_field(1, 20.0, 1024, 1.0)
    big = expand_box(g)
    assert (big.L, big.n) == (40.0, 1024)
    assert np.abs(big.values - gaussian_field(1, 40.0, 1024, 1.0).values).max() <= 1e-12


def test_expand_keeps_unresolved_data():
    g = gaussian_field(1, 20.0, 64, 0.01)
    big = expand_box(g)
    assert (big.L, big.n) == (40.0, 128)
    assert big.mass() == pytest.approx(g.mass())
    with pytest.raises(BoxTooSmall):
        expand_box(g, max_n=64)


def test_box_too_small():
    with pytest.raises(BoxTooSmall) as err:
        heat_apply_classical(gaussian_field(1, 5.0, 256, 1.0), 20.0)
    assert err.value.boundary_fraction > 1e-8


def test_field_validation():
    with pytest.raises(ValueError):
        GridField(4, 1.0, 2, np.zeros((2,) * 4))
    with pytest.raises(ValueError):
        GridField(1, 1.0, 4, np.zeros(5))
    with pytest.raises(ValueError):
        gaussian_field(1, 1.0, 4, 1.0) + gaussian_field(1, 2.0, 4, 1.0)


@pytest.mark.parametrize("d,n", [(1, 2048), (2, 256)])
def test_large_time_sup_recovers_mass(d, n):
    g = gaussian_field(d, L, n, 1.0, 2.0)
    model = GridModel(d, L, n)
    ts = np.array([1e6, 1e8])
    scaled = (4 * math.pi * ts) ** (d / 2) * model.sup_heat(g, ts)
    assert np.all(scaled >= g.mass() * (1 - 1e-3))
    assert np.all(scaled <= g.mass() * (1 + 1e-12))


def test_sup_heat_matches_spectral_route(bump):
    model = GridModel(1, L, N)
    ts = [0.5, 2.0]
    direct = model.sup_heat(bump, ts)
    peak = np.argmax(bump.values)
    spectral = [heat_apply_classical(bump, t).values[peak] for t in ts]
    np.testing.assert_allclose(direct, spectral, rtol=1e-10)


def test_blow_up_below_fujita():
    rec = evolve_classical(gaussian_field(1, L, N, 1.0, 0.1), 2.0, 1e4, amplitude=0.1)
    assert rec.outcome == "blow-up" and rec.d == 1


def test_small_data_global_above_fujita():
    u0 = gaussian_field(1, L, N, 1.0, 1e-2)
    rec, state, _ = evolve_classical(u0, 4.0, 1e4, amplitude=1e-2, keep_trajectory=True)
    assert rec.outcome == "global-candidate"
    hist = np.array([(h[0], h[2]) for h in state.history if h[0] >= 1.0])
    bound = (4 * math.pi * hist[:, 0]) ** -0.5 * u0.mass()
    assert np.all(hist[:, 1] <= bound * 1.01)


def test_critical_amplitude_is_the_sign_change():
    ts = np.geomspace(1e-2, 1e2, 41)
    a_star = critical_amplitude(1, 1.5, 1.0, ts, L=L, n=N)
    above = lemma61_certificate_classical(gaussian_field(1, L, N, 1.0, a_star * (1 + 1e-9)), 1.5, ts)
    below = lemma61_certificate_classical(gaussian_field(1, L, N, 1.0, a_star * (1 - 1e-9)), 1.5, ts)
    assert above.margin > 0 > below.margin


def test_critical_amplitude_needs_bracket():
    with pytest.raises(ValueError):
        critical_amplitude(1, 1.5, 1.0, [1.0], lo=1e3, hi=1e4)


def test_line_sweep_bracket():
    recs = classical_sweep(1, [2.0, 2.5, 3.5, 4.0], [0.01], 1e4, L, N)
    lo, hi = boundary_bracket(recs)
    assert lo is not None and hi is not None and lo < 3.0 < hi
