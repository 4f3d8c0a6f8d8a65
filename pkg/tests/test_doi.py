import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nc_heat.doi import (
    PhiKernel, doi_apply, estimate_cp, identity_residual, matrix_power, parse_pair, phi_value,
    random_hermitian, random_positive, schatten, schwartz_f, serialize_pair, spectral_pair,
    verify_nonlinearity,
)
from nc_heat.errors import BoundViolated, DimensionMismatch, NotConverged, NotPositive

pos = st.floats(1e-3, 1e3, allow_nan=False)


@pytest.mark.parametrize("p", [1.5, 2.0, 2.7, 4.0])
@pytest.mark.parametrize("dim", [1, 3, 12])
def test_identity_holds(p, dim, rng):
    for _ in range(5):
        res, scale = identity_residual(random_positive(dim, rng), random_positive(dim, rng), p)
        assert res <= 1e-10 * scale


def test_identity_with_rank_deficient_input(rng):
    A = random_positive(6, rng)
    v = np.linalg.eigh(A)[1]
    A = (v * np.array([0, 0, 1.0, 2.0, 3.0, 4.0])) @ v.conj().T
    res, scale = identity_residual(A, random_positive(6, rng), 3.0, PhiKernel(3.0, zero_tol=1e-12))
    assert res <= 1e-10 * scale


@settings(max_examples=200, deadline=None)
@given(a=pos, b=pos, p=st.floats(1.05, 6.0))
def test_symbol_solves_scalar_identity(a, b, p):
    # commuting case: phi(a, b) = (a^p - b^p) / ((a - b)(a^(p-1) + b^(p-1)))
    if abs(a - b) < 1e-6 * max(a, b):
        assert phi_value(PhiKernel(p), a, b) == pytest.approx(p / 2, rel=1e-5)
        return
    ref = (a**p - b**p) / ((a - b) * (a ** (p - 1) + b ** (p - 1)))
    assert phi_value(PhiKernel(p), a, b) == pytest.approx(ref, rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(a=pos, b=pos, p=st.floats(1.05, 6.0))
def test_symbol_is_symmetric_and_matches_f(a, b, p):
    k = PhiKernel(p)
    assert phi_value(k, a, b) == pytest.approx(phi_value(k, b, a), rel=1e-13)
    assert k(a, b) - 1 == pytest.approx(0.5 * schwartz_f(p, math.log(a / b)), rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_symbol_on_diagonal(p):
    assert phi_value(PhiKernel(p), 2.5, 2.5) == pytest.approx(p / 2)
    assert schwartz_f(p, 0.0) == pytest.approx(p - 2)


def test_symbol_zero_eigenvalue_convention():
    assert phi_value(PhiKernel(3.0), 0.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        phi_value(PhiKernel(3.0), -1.0, 1.0)


def test_schwartz_f_is_finite_far_out():
    assert np.all(np.isfinite(schwartz_f(3.7, np.array([-800.0, 800.0]))))


def test_cp_oracles():
    assert estimate_cp(2.0) == 1.0
    assert estimate_cp(3.0) == pytest.approx(1 + math.pi, rel=5e-3)


def test_cp_convergence_check_trips_on_coarse_grid():
    with pytest.raises(NotConverged):
        estimate_cp(3.0, extent=4.0, n=16)


def test_cp_rejects_small_p():
    with pytest.raises(ValueError):
        estimate_cp(1.0)


@pytest.mark.parametrize("q", [1.0, 2.0, 3.0, math.inf])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_bound_holds_on_random_pairs(p, q):
    rep = verify_nonlinearity(p, q, trials=20, dim=6, seed=3)
    # same rounding slack as the library check
    assert rep.max_theorem_ratio <= rep.c_p * (1 + 1e-9)
    assert rep.max_corollary_ratio <= rep.c_p * (1 + 1e-9)


def test_p_two_ratio_is_one():
    rep = verify_nonlinearity(2.0, 2.0, trials=10, dim=5, seed=1)
    assert rep.max_theorem_ratio == pytest.approx(1.0, abs=1e-10)


def test_corrupted_symbol_is_caught():
    bad = PhiKernel(3.0, diagonal_override=100.0)
    with pytest.raises(BoundViolated) as err:
        verify_nonlinearity(3.0, 2.0, trials=5, dim=6, seed=0, kernel=bad)
    rec = parse_pair(err.value.record)
    assert rec["p"] == 3.0 and rec["A"].shape == (6, 6)


def test_pair_serialization_round_trip(rng):
    A, B = random_positive(4, rng), random_hermitian(4, rng)
    rec = parse_pair(serialize_pair(2.5, math.inf, 7, A, B, trial=3))
    assert rec["q"] == math.inf and rec["seed"] == 7 and rec["trial"] == 3
    np.testing.assert_array_equal(rec["A"], A)
    np.testing.assert_array_equal(rec["B"], B)


def test_negative_input_rejected(rng):
    with pytest.raises(NotPositive):
        matrix_power(-random_positive(4, rng), 1.5)


def test_shape_mismatch(rng):
    with pytest.raises(DimensionMismatch):
        spectral_pair(random_positive(3, rng), random_positive(4, rng))
    pair = spectral_pair(random_positive(3, rng), random_positive(3, rng))
    with pytest.raises(DimensionMismatch):
        doi_apply(pair, PhiKernel(2.0), np.eye(4))


def test_doi_with_unit_symbol_is_identity(rng):
    pair = spectral_pair(random_positive(5, rng), random_positive(5, rng))
    X = random_hermitian(5, rng)
    np.testing.assert_allclose(doi_apply(pair, np.ones((5, 5)), X), X, atol=1e-12)


def test_schatten_inf_is_operator_norm(rng):
    X = random_hermitian(6, rng)
    assert schatten(X, math.inf) == pytest.approx(np.linalg.norm(X, 2))
    assert schatten(X, 2.0) == pytest.approx(np.linalg.norm(X))
