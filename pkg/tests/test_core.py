"""Charted spaces and pointwise tensors against hand-computed values."""

import math

import numpy as np
import pytest

from finslercomp import _dual as d
from finslercomp.core import (
    ChartedSpace, MetricAtVector, Pt, Vec,
    cartan_tensor, check_admissible, derive, finsler_norm,
    fundamental_tensor, inner_product, validate_homogeneity,
)
from finslercomp.errors import AdmissibilityError, NumericalError, ValidationError


def euclid_l(x, v):
    s = 0.0
    for c in v:
        s = s + c * c
    return 0.5 * s


def sphere_chart_l(x, v):
    # round sphere of curvature 1 in a stereographic chart
    x2 = x[0] * x[0] + x[1] * x[1]
    v2 = v[0] * v[0] + v[1] * v[1]
    f = 1.0 + x2
    return 2.0 * v2 / (f * f)


def randers_l(x, v):
    alpha = d.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    f = alpha + 0.3 * v[0]
    return 0.5 * f * f


def mink_l(x, v):
    return 0.5 * (-(v[0] * v[0]) + v[1] * v[1])


@pytest.fixture
def euclid2():
    return ChartedSpace(2, "positive", euclid_l, name="euclid2")


@pytest.fixture
def sphere2():
    return ChartedSpace(2, "positive", sphere_chart_l, name="sphere2")


@pytest.fixture
def randers3():
    return ChartedSpace(3, "positive", randers_l, name="randers3")


@pytest.fixture
def mink2():
    return ChartedSpace(2, "lorentzian", mink_l, name="mink2")


def test_fundamental_tensor_euclidean(euclid2):
    g = fundamental_tensor(euclid2, [0.2, -0.1], [1.0, 2.0])
    assert np.allclose(g.matrix, np.eye(2), atol=1e-14)


def test_fundamental_tensor_sphere_chart(sphere2):
    x = [0.3, 0.4]
    g = fundamental_tensor(sphere2, x, [1.0, 0.0])
    f = 1.0 + 0.25
    assert np.allclose(g.matrix, (4.0 / f ** 2) * np.eye(2), atol=1e-14)


def test_metric_x_derivative_sphere_chart(sphere2):
    # d g_11 / d x_1 = -16 x_1 / (1+|x|^2)^3 at x=(0.3, 0.4): -2.4576
    def g11(x, v):
        lv = d.fresh_level()
        lw = d.fresh_level()
        vv = [d.Dual(lv, v[0], 1.0), v[1]]
        vv[0] = d.Dual(lw, vv[0], 1.0)
        val = sphere_chart_l(x, vv)
        return d.eps_part(d.eps_part(val, lw), lv)

    val, err = derive(sphere2, g11, [0.3, 0.4], [1.0, 0.0], [("x", 0)])
    assert val == pytest.approx(-2.4576, abs=1e-7)
    assert abs(val - (-2.4576)) <= 10 * err + 1e-12


def test_randers_metric_matrices(randers3):
    g1 = fundamental_tensor(randers3, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    assert np.allclose(g1.matrix, np.diag([1.69, 1.3, 1.3]), atol=1e-12)
    g2 = fundamental_tensor(randers3, [0.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    want = np.array([[1.09, 0.3, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert np.allclose(g2.matrix, want, atol=1e-12)


def test_randers_metric_determinant(randers3):
    # det g = (F / |v|)^(n+1) for Randers metrics
    v = np.array([0.4, -0.3, 0.5])
    alpha = float(np.linalg.norm(v))
    F = alpha + 0.3 * v[0]
    g = fundamental_tensor(randers3, [0.1, 0.2, -0.1], v)
    assert np.linalg.det(g.matrix) == pytest.approx((F / alpha) ** 4, rel=1e-12)


def test_cartan_tensor_riemannian_vanishes(sphere2):
    C = cartan_tensor(sphere2, [0.1, -0.2], [0.5, 1.0])
    assert np.max(np.abs(C)) < 1e-13


def test_cartan_tensor_randers_symmetric_and_traceless(randers3):
    v = [0.8, 0.1, -0.4]
    C = cartan_tensor(randers3, [0.0, 0.0, 0.0], v)
    assert np.max(np.abs(C)) > 1e-3
    assert np.allclose(C, np.transpose(C, (1, 0, 2)), atol=1e-13)
    assert np.allclose(C, np.transpose(C, (0, 2, 1)), atol=1e-13)
    assert np.max(np.abs(np.einsum("ijk,k->ij", C, np.asarray(v)))) < 1e-12


def test_inner_product_and_norm(euclid2):
    x = [0.0, 0.0]
    g = fundamental_tensor(euclid2, x, [3.0, 4.0])
    assert inner_product(g, [3.0, 4.0], [3.0, 4.0]) == pytest.approx(25.0)
    assert finsler_norm(euclid2, x, [3.0, 4.0]) == pytest.approx(5.0)
    # Euler identity g_v(v, v) = F(v)^2
    vb = Vec([3.0, 4.0], Pt(x))
    assert inner_product(g, vb, vb) == pytest.approx(
        finsler_norm(euclid2, x, [3.0, 4.0]) ** 2)


def test_inner_product_base_mismatch(euclid2):
    g = fundamental_tensor(euclid2, [0.0, 0.0], [1.0, 0.0])
    w = Vec([1.0, 0.0], Pt([0.5, 0.0]))
    with pytest.raises(ValidationError):
        inner_product(g, w, w)


def test_lorentzian_norm_and_admissibility(mink2):
    x = [0.0, 0.0]
    assert finsler_norm(mink2, x, [1.0, 0.3]) == pytest.approx(math.sqrt(1 - 0.09))
    with pytest.raises(AdmissibilityError):
        finsler_norm(mink2, x, [0.3, 1.0])
    with pytest.raises(AdmissibilityError):
        check_admissible(mink2, x, [1.0, 1.0])


def test_lorentzian_metric_signature(mink2):
    g = fundamental_tensor(mink2, [0.0, 0.0], [1.0, 0.2])
    assert np.allclose(g.matrix, np.diag([-1.0, 1.0]), atol=1e-14)


def test_zero_vector_rejected(euclid2):
    with pytest.raises(AdmissibilityError):
        fundamental_tensor(euclid2, [0.0, 0.0], [0.0, 0.0])


def test_derive_value_and_estimate_quadratic(euclid2):
    field = lambda x, v: x[0] * x[0] + v[1] * v[1]
    val, err = derive(euclid2, field, [0.4, 0.0], [1.0, 0.7], [("x", 0), ("x", 0)])
    assert abs(val - 2.0) <= 10 * err
    val, err = derive(euclid2, field, [0.4, 0.0], [1.0, 0.7], [("v", 1), ("v", 1)])
    assert abs(val - 2.0) <= 10 * err


def test_derive_third_order_cubic(euclid2):
    field = lambda x, v: x[0] ** 3
    val, err = derive(euclid2, field, [0.2, 0.0], [1.0, 0.0],
                      [("x", 0), ("x", 0), ("x", 0)])
    assert abs(val - 6.0) <= 10 * err
    assert err < 1e-3


def test_derive_mixed_partial(euclid2):
    field = lambda x, v: math.sin(x[0] * v[1]) + x[1] * x[1] * v[0]
    x0, v1 = 0.3, 0.2
    want = math.cos(x0 * v1) - x0 * v1 * math.sin(x0 * v1)
    val, err = derive(euclid2, field, [x0, 0.5], [0.7, v1], [("x", 0), ("v", 1)])
    assert val == pytest.approx(want, abs=1e-7)
    assert abs(val - want) <= 10 * err + 1e-12


def test_derive_multi_index_pair_form(euclid2):
    field = lambda x, v: math.sin(x[0] * v[1])
    a, _ = derive(euclid2, field, [0.3, 0.5], [0.7, 0.2], [("x", 0), ("v", 1)])
    b, _ = derive(euclid2, field, [0.3, 0.5], [0.7, 0.2], ((1, 0), (0, 1)))
    assert a == pytest.approx(b, rel=1e-12)


def test_derive_order_too_high(euclid2):
    field = lambda x, v: x[0]
    with pytest.raises(ValidationError):
        derive(euclid2, field, [0.0, 0.0], [1.0, 0.0], [("x", 0)] * 5)


def test_derive_stencil_leaves_chart():
    space = ChartedSpace(1, "positive", euclid_l,
                         chart_domain=lambda x: abs(x[0]) < 1.0)
    field = lambda x, v: x[0] * x[0]
    with pytest.raises(AdmissibilityError):
        derive(space, field, [1.0 - 1e-9], [1.0], [("x", 0)])


def test_derive_tolerance_gate(euclid2):
    field = lambda x, v: math.exp(3.0 * x[0])
    with pytest.raises(NumericalError):
        derive(euclid2, field, [0.2, 0.0], [1.0, 0.0],
               [("x", 0)] * 4, tol=1e-16)


def test_validate_homogeneity_positive(randers3):
    rep = validate_homogeneity(randers3, sample_count=60, rng_seed=3)
    assert rep.verdict == "pass"
    assert rep.max_violation < 1e-8


def test_validate_homogeneity_lorentzian(mink2):
    rep = validate_homogeneity(mink2, sample_count=60, rng_seed=4)
    assert rep.verdict == "pass"


def test_validate_homogeneity_flags_inhomogeneous():
    # L with an additive 1-homogeneous defect is not 2-homogeneous
    bad = lambda x, v: 0.5 * (v[0] * v[0] + v[1] * v[1]) + d.sqrt(
        v[0] * v[0] + v[1] * v[1])
    space = ChartedSpace(2, "positive", bad, name="bad")
    rep = validate_homogeneity(space, sample_count=40, rng_seed=5)
    assert rep.verdict == "fail"


def test_metric_at_vector_dataclass(euclid2):
    g = fundamental_tensor(euclid2, [0.1, 0.2], [1.0, 1.0])
    assert isinstance(g, MetricAtVector)
    assert np.array_equal(g.base[0].coords, np.array([0.1, 0.2]))
    assert np.array_equal(g.base[1].coords, np.array([1.0, 1.0]))
