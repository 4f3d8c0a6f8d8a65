import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nc_heat.convexity import (
    CPMap, heat_cp_map, jensen_gap, parse_jensen, power_integral, power_integral_check,
    random_unital_cp, schur_positive, search_jensen_counterexample, serialize_jensen,
    unitary_mixture,
)
from nc_heat.doi import random_hermitian, random_positive
from nc_heat.errors import IllConditioned, JensenViolated, QuadratureUnderresolved


@pytest.mark.parametrize("dim,n_kraus", [(2, 1), (4, 2), (6, 3)])
def test_random_map_is_unital(dim, n_kraus):
    phi = random_unital_cp(dim, n_kraus, seed=dim)
    assert phi.unital
    np.testing.assert_allclose(phi(np.eye(dim)), np.eye(dim), atol=1e-12)


def test_single_kraus_map_is_unitary_conjugation():
    k = random_unital_cp(3, 1, seed=0).kraus[0]
    np.testing.assert_allclose(k @ k.conj().T, np.eye(3), atol=1e-12)


def test_map_is_completely_positive(rng):
    phi = random_unital_cp(3, 2, seed=1).lift(2)
    z = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    assert np.linalg.eigvalsh(phi(z @ z.conj().T)).min() >= -1e-12


def test_unitary_mixture_is_unital_and_trace_preserving(rng):
    us = [np.linalg.qr(rng.standard_normal((4, 4)))[0] for _ in range(3)]
    phi = unitary_mixture(us, [0.2, 0.3, 0.5])
    assert phi.unital and phi.trace_preserving


@settings(max_examples=60, deadline=None)
@given(p=st.floats(1.0, 2.0), seed=st.integers(0, 2**31 - 1), n_kraus=st.integers(1, 3))
def test_jensen_holds_for_p_up_to_two(p, seed, n_kraus):
    phi = random_unital_cp(4, n_kraus, seed)
    u = random_positive(4, np.random.default_rng(seed))
    assert jensen_gap(phi, u, p, check=True) >= -1e-9 * np.linalg.norm(u, 2) ** p


@pytest.mark.parametrize("t", [0.1, 1.0])
def test_jensen_on_heat_channel(small_cfg, rng, t):
    phi = heat_cp_map(small_cfg, t)
    assert phi.is_subunital()
    u = random_positive(phi.dim_in, rng)
    assert jensen_gap(phi, u, 1.5) >= -1e-9 * np.linalg.norm(u, 2) ** 1.5


def test_counterexample_above_two():
    gap, phi, u, trial = search_jensen_counterexample(p=3.0, dim=4, trials=200, seed=0)
    assert gap < -1e-4
    with pytest.raises(JensenViolated) as err:
        jensen_gap(phi, u, 3.0, check=True)
    rec = parse_jensen(err.value.record)
    assert jensen_gap(rec["phi"], rec["u"], rec["p"], check=False) == pytest.approx(gap, rel=1e-10)


def test_jensen_serialization_round_trip(rng):
    phi = random_unital_cp(3, 2, seed=5)
    u = random_positive(3, rng)
    rec = parse_jensen(serialize_jensen(phi, u, 2.5, seed=9))
    assert rec["p"] == 2.5 and rec["seed"] == 9
    np.testing.assert_array_equal(rec["u"], u)
    np.testing.assert_array_equal(rec["phi"].kraus, phi.kraus)


def test_schur_routes_agree(rng):
    for _ in range(20):
        A = random_positive(3, rng) + 0.1 * np.eye(3)
        B = random_hermitian(3, rng)
        C = B.conj().T @ np.linalg.solve(A, B) + rng.uniform(-0.5, 0.5) * np.eye(3)
        block, comp = schur_positive(A, B, C)
        assert block == comp


def test_schur_rejects_singular_corner():
    with pytest.raises(IllConditioned):
        schur_positive(np.diag([1.0, 0.0]), np.eye(2), np.eye(2))


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_power_integral_matches_eigen_route(p, rng):
    x = random_positive(5, rng) + 1e-3 * np.eye(5)
    assert power_integral_check(x, p, tol=1e-6) <= 1e-6


def test_power_integral_underresolved_flag(rng):
    x = random_positive(4, rng) + 1e-3 * np.eye(4)
    with pytest.raises(QuadratureUnderresolved):
        power_integral_check(x, 1.5, tol=1e-6, panels=2, nodes=2)


def test_power_integral_domain():
    with pytest.raises(ValueError):
        power_integral(np.eye(2), 2.5)


def test_cpmap_promotes_single_operator():
    phi = CPMap(np.eye(3))
    assert phi.kraus.shape == (1, 3, 3) and phi.dim_in == phi.dim_out == 3
