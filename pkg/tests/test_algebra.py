import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nc_heat.algebra import (
    J, ModelConfig, adjoint, calibrate_trace, embed, inner_translation_vector, is_hermitian,
    is_positive, ladder_matrices, lambda_theta, model_config, outside_mass, tau, translate,
    unitarity_defect, weyl_operator, weyl_operator_laguerre,
)
from nc_heat.errors import CalibrationUnstable, LeakageExceeded
from nc_heat.heat import derivation, gaussian_operator_exact, laplacian_apply


def test_config_defaults_and_validation():
    c = ModelConfig()
    assert (c.N, c.N_pad, c.h) == (48, 96, 1.0)
    with pytest.raises(ValueError):
        ModelConfig(N=10, N_pad=5)
    with pytest.raises(ValueError):
        ModelConfig(h=0.0)
    with pytest.raises(ValueError):
        ModelConfig().tau_constant
    np.testing.assert_allclose(ModelConfig(h=0.5).theta, 0.5 * J)


def test_ladder_matrices_canonical_commutator(cfg):
    lad = ladder_matrices(cfg)
    Q, P = lad["Q"], -1j * lad["Dq"]
    comm = (Q @ P - P @ Q)[: cfg.N, : cfg.N]
    np.testing.assert_allclose(comm, 1j * np.eye(cfg.N), atol=1e-12)
    assert is_hermitian(Q) and is_hermitian(P)


@pytest.mark.parametrize("zeta", [(0.3, -0.2), (1.0, 0.5), (-2.0, 1.5), (0.0, 3.0)])
def test_weyl_matches_laguerre_closed_form(cfg, zeta):
    w = weyl_operator(cfg, zeta)
    ref = weyl_operator_laguerre(cfg, zeta)
    n = cfg.N
    np.testing.assert_allclose(w[:n, :n], ref[:n, :n], atol=1e-10)


def test_weyl_identity_and_inverse(cfg):
    n = cfg.N
    np.testing.assert_allclose(weyl_operator(cfg, (0, 0))[:n, :n], np.eye(n), atol=1e-12)
    z = np.array([0.7, -1.1])
    prod = weyl_operator(cfg, z) @ weyl_operator(cfg, -z)
    np.testing.assert_allclose(prod[:n, :n], np.eye(n), atol=1e-8)
    np.testing.assert_allclose(weyl_operator(cfg, -z), adjoint(weyl_operator(cfg, z)), atol=1e-12)


@pytest.mark.parametrize("h", [1.0, 0.5])
@pytest.mark.parametrize("t,s", [((0.4, 0.1), (-0.3, 0.6)), ((1.0, -0.5), (0.2, 0.9))])
def test_weyl_relation(h, t, s):
    c = model_config(N=40, N_pad=96, h=h, calibrate=False)
    t, s = np.array(t), np.array(s)
    lhs = weyl_operator(c, t) @ weyl_operator(c, s)
    phase = np.exp(0.5j * t @ (c.theta @ s))
    rhs = phase * weyl_operator(c, t + s)
    np.testing.assert_allclose(lhs[:40, :40], rhs[:40, :40], atol=1e-8)


def test_weyl_leakage_is_reported(cfg):
    with pytest.raises(LeakageExceeded) as exc:
        weyl_operator(cfg, (12.0, 0.0))
    assert exc.value.leakage > cfg.tol_leak
    assert unitarity_defect(weyl_operator(cfg, (12.0, 0.0), check=False), cfg.N) > cfg.tol_leak


def test_translation_phase_on_weyl_operators(cfg):
    s = np.array([0.3, -0.4])
    t = np.array([0.5, 0.2])
    w = weyl_operator(cfg, t)
    out = translate(cfg, s, w)
    np.testing.assert_allclose(out[:24, :24], np.exp(1j * s @ t) * w[:24, :24], atol=1e-8)


def test_translation_inner_vector(cfg):
    s = np.array([1.0, 2.0])
    a = inner_translation_vector(cfg, s)
    t = np.array([0.3, -0.7])
    assert a @ (cfg.theta @ t) == pytest.approx(s @ t)


@settings(max_examples=20, deadline=None)
@given(s1=st.floats(-0.8, 0.8), s2=st.floats(-0.8, 0.8))
def test_translation_is_spectrum_preserving(cfg, s1, s2):
    x = gaussian_operator_exact(1.0, cfg.N)
    y = translate(cfg, (s1, s2), x)
    np.testing.assert_allclose(np.linalg.eigvalsh(y)[-5:], np.linalg.eigvalsh(x)[-5:], atol=1e-9)


def test_translation_zero_is_identity(cfg, rng):
    x = rng.standard_normal((cfg.N, cfg.N))
    np.testing.assert_array_equal(translate(cfg, (0, 0), x), x)


def test_translation_leakage(cfg):
    x = np.zeros((cfg.N, cfg.N))
    x[-1, -1] = 1.0
    with pytest.raises(LeakageExceeded):
        translate(cfg, (2.0, 0.0), x)


def test_calibration_constant(cfg):
    assert cfg.c_tau == pytest.approx(2 * math.pi, rel=1e-8)
    assert tau(cfg, gaussian_operator_exact(1.0, cfg.N)).real == pytest.approx(1.0, rel=1e-10)


def test_calibration_unstable_for_tiny_block():
    with pytest.raises(CalibrationUnstable):
        calibrate_trace(model_config(N=4, calibrate=False))


def test_lambda_of_gaussian_symbol(cfg):
    t = 1.0
    op = lambda_theta(cfg, lambda a, b: np.exp(-t * (a * a + b * b)), math.sqrt(40 / t), order=96)
    ref = (2 * math.pi) ** 2 * gaussian_operator_exact(t, cfg.N)
    np.testing.assert_allclose(op, ref, atol=1e-10)


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (0.7, 1.3), (1.0, 2.0)])
def test_plancherel_carries_two_pi_factor(a, b):
    # <lambda f, lambda g>_tau = (2 pi)^2 <f, g> for f = exp(-a|t|^2), g = exp(-b|t|^2)
    dim = 400
    fa = (2 * math.pi) ** 2 * gaussian_operator_exact(a, dim)
    gb = (2 * math.pi) ** 2 * gaussian_operator_exact(b, dim)
    lhs = 2 * math.pi * np.trace(fa @ gb).real
    assert lhs == pytest.approx((2 * math.pi) ** 2 * math.pi / (a + b), rel=1e-10)


@pytest.mark.parametrize("j", [0, 1])
def test_derivation_matches_symbol_multiplication(cfg, j):
    R = math.sqrt(40.0)
    f = lambda a, b: np.exp(-(a * a + b * b))
    lf = lambda_theta(cfg, f, R)
    ref = lambda_theta(cfg, lambda a, b: 1j * (a if j == 0 else b) * f(a, b), R)
    np.testing.assert_allclose(derivation(cfg, j, lf)[:40, :40], ref[:40, :40], atol=1e-10)


def test_laplacian_matches_symbol_multiplication(cfg):
    R = math.sqrt(40.0)
    f = lambda a, b: np.exp(-(a * a + b * b))
    ref = lambda_theta(cfg, lambda a, b: (a * a + b * b) * f(a, b), R)
    out = laplacian_apply(cfg, lambda_theta(cfg, f, R))
    np.testing.assert_allclose(out[:40, :40], ref[:40, :40], atol=1e-10)


def test_helpers(rng):
    x = rng.standard_normal((4, 4))
    big = embed(x, 6)
    assert big.shape == (6, 6) and np.all(big[4:, :] == 0)
    assert outside_mass(big, 4) == 0.0
    assert is_positive(x @ x.T) and not is_positive(-x @ x.T - np.eye(4))
    assert not is_hermitian(np.triu(np.ones((4, 4)), 1))
