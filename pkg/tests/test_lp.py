import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from nc_heat.errors import ExponentMismatch, InvalidExponent
from nc_heat.heat import gaussian_operator_exact
from nc_heat.lp import (
    SingularProfile, holder_defect, lp_norm, lp_norm_positive, singular_profile, singular_values,
)

matrices = arrays(np.float64, (5, 5), elements=st.floats(-3, 3, allow_nan=False, allow_infinity=False))


def test_singular_values_match_svd(rng):
    x = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
    np.testing.assert_allclose(singular_values(x), np.linalg.svd(x, compute_uv=False), atol=1e-12)


def test_profile_is_step_function(cfg):
    x = np.diag([3.0, 2.0, 2.0, 0.5])
    prof = singular_profile(cfg, x)
    w = cfg.tau_constant
    np.testing.assert_allclose(prof.mu([0.0, 0.5 * w, 1.5 * w, 3.5 * w, 10 * w]), [3, 3, 2, 0.5, 0])
    np.testing.assert_allclose(prof.distribution([0.1, 1.0, 2.0, 3.0]), [4 * w, 3 * w, w, 0])


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0, math.inf])
def test_norm_of_diagonal(cfg, p):
    d = np.array([1.0, 0.5, 0.25, 0.0])
    ref = d.max() if p == math.inf else (cfg.tau_constant * np.sum(d**p)) ** (1 / p)
    assert lp_norm(cfg, np.diag(d), p) == pytest.approx(ref, rel=1e-12)
    assert lp_norm_positive(cfg, d, p) == pytest.approx(ref, rel=1e-12)


def test_gaussian_operator_has_unit_l1_norm(cfg):
    assert lp_norm(cfg, gaussian_operator_exact(0.5, 400), 1.0) == pytest.approx(1.0, rel=1e-10)


def test_large_exponent_does_not_overflow(cfg):
    assert lp_norm(cfg, np.diag([1e200, 1e200]), 8.0) == pytest.approx(1e200 * (2 * cfg.tau_constant) ** 0.125)


def test_invalid_exponent(cfg):
    with pytest.raises(InvalidExponent):
        lp_norm(cfg, np.eye(2), 0.5)
    with pytest.raises(InvalidExponent):
        lp_norm_positive(cfg, np.eye(2), 0.9)


def test_holder_exponent_mismatch(cfg):
    with pytest.raises(ExponentMismatch):
        holder_defect(cfg, np.eye(2), np.eye(2), 2.0, 2.0, 2.0)


@settings(max_examples=60, deadline=None)
@given(x=matrices, y=matrices, p=st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf]),
       q=st.sampled_from([1.0, 2.0, 4.0, math.inf]))
def test_holder_inequality(cfg, x, y, p, q):
    inv = (0 if p == math.inf else 1 / p) + (0 if q == math.inf else 1 / q)
    if inv > 1:
        return
    r = math.inf if inv == 0 else 1 / inv
    scale = max(lp_norm(cfg, x, p) * lp_norm(cfg, y, q), 1e-300)
    assert holder_defect(cfg, x, y, p, q, r) <= 1e-10 * scale


@settings(max_examples=40, deadline=None)
@given(x=matrices, c=st.floats(-5, 5), p=st.sampled_from([1.0, 2.0, 3.5, math.inf]))
def test_norm_is_absolutely_homogeneous(cfg, x, c, p):
    assert lp_norm(cfg, c * x, p) == pytest.approx(abs(c) * lp_norm(cfg, x, p), rel=1e-9, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(x=matrices, y=matrices, p=st.sampled_from([1.0, 2.0, 3.0, math.inf]))
def test_triangle_inequality(cfg, x, y, p):
    assert lp_norm(cfg, x + y, p) <= lp_norm(cfg, x, p) + lp_norm(cfg, y, p) + 1e-9


def test_profile_dataclass_zero_tail():
    prof = SingularProfile(values=np.array([2.0]), weight=1.0)
    assert prof.mu(5.0) == 0.0
