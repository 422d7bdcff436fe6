"""Causal classification, Legendre duality, Lagrange tensors, spacetime
comparison checks, sector volumes, Hessian symmetry.

Closed-form references: Minkowski space (linear Legendre map, J = t I,
theta = n/t, cone volume ratios (R/r)^(n+1)), the cos warped product
(J = sin t on comoving observers, theta = n cot t), hand-differentiated
Gaussian weights, the quartic two-cone metric at its exactly solvable
double-preimage angle, and a static product with a round spatial sphere
(conjugate point at t = pi).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import finslercomp.lorentz as lz
import finslercomp._dual as d
from finslercomp.core import ChartedSpace
from finslercomp.connection import integrate_geodesic
from finslercomp.errors import AdmissibilityError, NumericalError, \
    ValidationError
from finslercomp.weighted import comparison_params, weight_from_density
from finslercomp.zoo import build_zoo

MINK3 = build_zoo("minkowski", {"dim": 3})
MINK4 = build_zoo("minkowski", {"dim": 4})
WMINK4 = build_zoo("weighted_minkowski", {"dim": 4, "lam": 0.25})
FLRW4 = build_zoo("flrw", {"dim": 4, "profile": "cos"})
BEEM = build_zoo("beem", {"k": 4})


def static_sphere():
    # -dt^2 + round unit 2-sphere in stereographic coordinates; the
    # equator maps to |y| = 1 so orbiting geodesics stay bounded
    def lag(x, v):
        w = 2.0 / (1.0 + x[1] * x[1] + x[2] * x[2])
        return 0.5 * (-(v[0] * v[0]) + w * w * (v[1] * v[1] + v[2] * v[2]))

    return ChartedSpace(3, "lorentzian", lag, name="static_sphere")


def future_timelike(space, x, rng, count):
    # v = (a |w| + gap, w) is strictly inside the future cone
    vs = []
    for _ in range(count):
        w = rng.standard_normal(space.dim - 1)
        if space is FLRW4:
            a = math.cos(x[0])
        else:
            a = 1.0
        lead = a * float(np.linalg.norm(w)) + 0.2 + float(rng.random())
        vs.append(np.concatenate(([lead], w)))
    return vs


def beem_wedge(rng, count, timelike_margin=0.15):
    lo = math.pi / 8 + timelike_margin
    hi = 3 * math.pi / 8 - timelike_margin
    th = lo + (hi - lo) * rng.random(count)
    r = 0.5 + 2.0 * rng.random(count)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


# ---------------------------------------------------------------- classify

def test_classify_minkowski_kinds():
    assert str(lz.classify(MINK4, [0, 0, 0, 0], [1, 0, 0, 0])) == \
        "timelike future"
    c = lz.classify(MINK4, [0, 0, 0, 0], [-2, 0, 0, 0])
    assert c.kind == "timelike" and c.future is False
    c = lz.classify(MINK4, [0, 0, 0, 0], [1, 1, 0, 0])
    assert c.kind == "lightlike" and c.future is True
    c = lz.classify(MINK4, [0, 0, 0, 0], [0.3, 1, 0, 0])
    assert c.kind == "spacelike" and c.future is None
    assert lz.classify(MINK4, [0, 0, 0, 0], [0, 0, 0, 0]).kind == "zero"


def test_classify_positive_scale_invariance():
    rng = np.random.default_rng(3)
    x = [0.1, 0.0, 0.2, -0.1]
    for _ in range(200):
        v = rng.standard_normal(4) * (0.1 + 3 * rng.random())
        c1 = lz.classify(MINK4, x, v)
        c2 = lz.classify(MINK4, x, 7.3 * v)
        assert (c1.kind, c1.future) == (c2.kind, c2.future)
        if c1.kind == "timelike":
            cr = lz.classify(MINK4, x, -v)
            assert cr.kind == "timelike" and cr.future is (not c1.future)


def test_classify_flrw_and_beem():
    c = lz.classify(FLRW4, [0.3, 0.1, 0.0, 0.0], [1.0, 0.1, 0.0, 0.0])
    assert c.kind == "timelike" and c.future is True
    s = math.sqrt(0.5)
    c = lz.classify(BEEM, [0.0, 0.0], [s, s])
    assert c.kind == "timelike" and c.future is True
    # 45 degrees off the axis sits between the timelike wedges
    assert lz.classify(BEEM, [0.0, 0.0], [1.0, 0.0]).kind == "spacelike"


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(0.05, 40.0), seed=st.integers(0, 10 ** 6))
def test_classify_scaling_property(lam, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(3)
    c1 = lz.classify(MINK3, [0, 0, 0], v)
    c2 = lz.classify(MINK3, [0, 0, 0], lam * v)
    assert (c1.kind, c1.future) == (c2.kind, c2.future)


# --------------------------------------------------------------- legendre

def test_legendre_minkowski_closed_form():
    v = [1.3, 0.4, -0.2, 0.7]
    om = lz.legendre(MINK4, [0, 0, 0, 0], v).coords
    assert np.allclose(om, [-1.3, 0.4, -0.2, 0.7], atol=1e-14)


def test_legendre_flrw_closed_form():
    x = [0.4, 0.0, 0.1, 0.0]
    a2 = math.cos(0.4) ** 2
    v = [1.5, 0.3, -0.1, 0.2]
    om = lz.legendre(FLRW4, x, v).coords
    assert np.allclose(om, [-1.5, a2 * 0.3, -a2 * 0.1, a2 * 0.2], atol=1e-13)


def test_legendre_rejects_zero_vector():
    with pytest.raises(AdmissibilityError):
        lz.legendre(MINK4, [0, 0, 0, 0], [0, 0, 0, 0])


def test_polar_cone_margin_signs():
    x = [0, 0, 0, 0]
    assert lz.polar_cone_margin(MINK4, x, [-1, 0, 0, 0]) < 0
    assert lz.polar_cone_margin(MINK4, x, [1, 0, 0, 0]) > 0
    assert lz.polar_cone_margin(MINK4, x, [0, 1, 0, 0]) > 0


def test_legendre_inverse_roundtrip_minkowski():
    rng = np.random.default_rng(11)
    x = [0, 0, 0, 0]
    for v in future_timelike(MINK4, x, rng, 60):
        om = lz.legendre(MINK4, x, v).coords
        back = lz.legendre_inverse(MINK4, x, om).coords
        assert np.max(np.abs(back - v)) <= 1e-8 * max(1.0, np.max(np.abs(v)))


def test_legendre_inverse_roundtrip_flrw():
    rng = np.random.default_rng(12)
    x = [0.3, 0.2, -0.1, 0.4]
    for v in future_timelike(FLRW4, x, rng, 40):
        om = lz.legendre(FLRW4, x, v).coords
        back = lz.legendre_inverse(FLRW4, x, om).coords
        assert np.max(np.abs(back - v)) <= 1e-8 * max(1.0, np.max(np.abs(v)))


def test_legendre_inverse_roundtrip_beem():
    rng = np.random.default_rng(13)
    x = [0.0, 0.0]
    for v in beem_wedge(rng, 40):
        om = lz.legendre(BEEM, x, v).coords
        back = lz.legendre_inverse(BEEM, x, om).coords
        assert np.max(np.abs(back - v)) <= 1e-8 * max(1.0, np.max(np.abs(v)))


def test_legendre_dual_lagrangian_identity():
    # L(inverse(om)) = om(inverse(om)) / 2 for 2-homogeneous L
    rng = np.random.default_rng(14)
    x = [0, 0, 0, 0]
    from finslercomp.core import lagrangian_value
    for v in future_timelike(MINK4, x, rng, 25):
        om = lz.legendre(MINK4, x, v).coords
        u = lz.legendre_inverse(MINK4, x, om).coords
        lval = lagrangian_value(MINK4, x, u)
        assert abs(lval - 0.5 * float(om @ u)) <= 1e-9 * max(1.0, abs(lval))


def test_legendre_inverse_jacobian_is_inverse_metric():
    # d(inverse)/d(omega) = g(x, v)^(-1) at omega = legendre(v)
    import finslercomp._engine as eng
    for space, x, v in (
            (MINK4, [0, 0, 0, 0], [1.4, 0.2, -0.3, 0.1]),
            (FLRW4, [0.3, 0.1, 0.0, -0.2], [1.2, 0.25, 0.1, -0.05]),
            (BEEM, [0.0, 0.0], [1.0, 0.9])):
        n = space.dim
        om = lz.legendre(space, x, v).coords
        gm = np.array([[float(d.real(c)) for c in row]
                       for row in eng.metric(space.lagrangian, n, list(x),
                                             [float(c) for c in v])])
        ginv = np.linalg.inv(gm)
        h = 1e-6
        jac = np.empty((n, n))
        for j in range(n):
            op = om.copy(); op[j] += h
            omn = om.copy(); omn[j] -= h
            up = lz.legendre_inverse(space, x, op).coords
            un = lz.legendre_inverse(space, x, omn).coords
            jac[:, j] = (up - un) / (2 * h)
        assert np.max(np.abs(jac - ginv)) <= 1e-5 * max(1.0, np.max(np.abs(ginv)))


def test_beem_double_preimage_angle():
    # sin(theta)^4 = 1/8 makes two distinct timelike rays share one
    # covector; the inverse must return the one in the axis cone
    th1 = math.asin(8.0 ** -0.25)
    th2 = math.pi - th1
    x = [0.0, 0.0]
    v1 = np.array([math.cos(th1), math.sin(th1)])
    v2 = np.array([math.cos(th2), math.sin(th2)])
    om1 = lz.legendre(BEEM, x, v1).coords
    om2 = lz.legendre(BEEM, x, v2).coords
    assert np.max(np.abs(om1 - om2)) <= 1e-8
    back = lz.legendre_inverse(BEEM, x, om1).coords
    assert np.max(np.abs(back - v1)) <= 1e-8
    assert np.max(np.abs(back - v2)) > 0.5


def test_legendre_inverse_rejects_outside_polar():
    with pytest.raises(AdmissibilityError):
        lz.legendre_inverse(MINK4, [0, 0, 0, 0], [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(AdmissibilityError):
        # spacelike-dominated covector exits the polar cone
        lz.legendre_inverse(MINK4, [0, 0, 0, 0], [-0.3, 1.0, 0.0, 0.0])


def test_reverse_cauchy_schwarz():
    # om_v(w)^2 >= 4 L(v) L(w) for same-cone timelike pairs
    from finslercomp.core import lagrangian_value
    rng = np.random.default_rng(15)
    x4 = [0, 0, 0, 0]
    pairs = list(zip(future_timelike(MINK4, x4, rng, 40),
                     future_timelike(MINK4, x4, rng, 40)))
    for v, w in pairs:
        om = lz.legendre(MINK4, x4, v).coords
        lhs = float(om @ w) ** 2
        rhs = 4.0 * lagrangian_value(MINK4, x4, v) * \
            lagrangian_value(MINK4, x4, w)
        assert lhs >= rhs - 1e-10 * max(1.0, abs(rhs))
    x2 = [0.0, 0.0]
    vs = beem_wedge(rng, 30)
    ws = beem_wedge(rng, 30)
    for v, w in zip(vs, ws):
        om = lz.legendre(BEEM, x2, v).coords
        lhs = float(om @ w) ** 2
        rhs = 4.0 * lagrangian_value(BEEM, x2, v) * \
            lagrangian_value(BEEM, x2, w)
        assert lhs >= rhs - 1e-10 * max(1.0, abs(rhs))
    # equality on parallel vectors
    v = np.array([1.2, 0.3, 0.1, -0.2])
    om = lz.legendre(MINK4, x4, v).coords
    w = 1.7 * v
    lhs = float(om @ w) ** 2
    rhs = 4.0 * lagrangian_value(MINK4, x4, v) * lagrangian_value(MINK4, x4, w)
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_geodesic_preserves_causal_character():
    path = integrate_geodesic(FLRW4, [0.0, 0.1, -0.2, 0.05],
                              [1.1, 0.3, 0.0, 0.1], 1.2)
    assert path.lagrangian_drift <= 1e-8
    xg, vg = path.interp([path.t_grid[-1]])
    c = lz.classify(FLRW4, [float(a[0]) for a in xg],
                    [float(a[0]) for a in vg])
    assert c.kind == "timelike" and c.future is True


# --------------------------------------------------------- lagrange tensor

def mink_data(eps=1.0, t_end=3.0, n_steps=400):
    path = integrate_geodesic(MINK4, [0, 0, 0, 0], [1, 0, 0, 0], t_end)
    return lz.lagrange_tensor(MINK4, path, eps, density=lambda x: 1.0,
                              n_steps=n_steps)


def test_lagrange_tensor_minkowski_linear():
    data = mink_data()
    t = data.t
    eye = np.eye(3)
    assert np.max(np.abs(data.J - t[:, None, None] * eye)) <= 1e-10
    mid = t.size // 2
    assert np.max(np.abs(data.B[mid] - eye / t[mid])) <= 1e-12
    assert abs(data.theta[mid] - 3.0 / t[mid]) <= 1e-12
    assert np.max(np.abs(data.sigma[1:])) <= 1e-11
    assert data.conjugate_t is None and data.truncated is False
    assert data.diagnostics["lagrange_condition"] <= 1e-10


def test_lagrange_tensor_flrw_sine():
    path = integrate_geodesic(FLRW4, [0.0, 0.2, -0.1, 0.3],
                              [1.0, 0.0, 0.0, 0.0], 1.4)
    data = lz.lagrange_tensor(FLRW4, path, 1.0)
    t = data.t
    win = t >= 0.3
    sines = np.sin(t[win])
    diag = data.J[win][:, [0, 1, 2], [0, 1, 2]]
    assert np.max(np.abs(diag - sines[:, None])) <= 1e-8
    theta_ref = 3.0 * np.cos(t[win]) / np.sin(t[win])
    assert np.max(np.abs(data.theta[win] - theta_ref)) <= 1e-7


def test_lagrange_tensor_conjugate_truncation():
    ss = static_sphere()
    path = integrate_geodesic(ss, [0.0, 1.0, 0.0],
                              [math.sqrt(2.0), 0.0, 1.0], 4.0)
    data = lz.lagrange_tensor(ss, path, 1.0, density=lambda x: 1.0)
    assert data.truncated is True
    assert abs(data.conjugate_t - math.pi) <= 1e-6
    assert data.t[-1] < math.pi
    dets = np.linalg.det(data.J[1:])
    assert np.all(dets > 0)


def test_lagrange_tensor_rejects_non_unit_seed():
    path = integrate_geodesic(MINK4, [0, 0, 0, 0], [2, 0, 0, 0], 2.0)
    with pytest.raises(ValidationError):
        lz.lagrange_tensor(MINK4, path, 1.0, density=lambda x: 1.0)


def test_lagrange_tensor_rejects_foreign_weight_grid():
    path = integrate_geodesic(WMINK4, [0, 0, 0, 0], [1, 0, 0, 0], 2.0)
    other = integrate_geodesic(WMINK4, [0, 0, 0, 0], [1, 0, 0, 0], 1.0)
    w = weight_from_density(WMINK4, None, other, n_steps=200)
    with pytest.raises(ValidationError):
        lz.lagrange_tensor(WMINK4, path, 1.0, weight=w)


def test_lagrange_tensor_deformed_fields():
    path = integrate_geodesic(WMINK4, [0.1, 0.2, -0.1, 0.3],
                              [1, 0, 0, 0], 2.5)
    data = lz.lagrange_tensor(WMINK4, path, 0.0)
    w = data.weight
    fac = np.exp((2.0 / 3.0) * w.psi)  # -2(eps-1)psi/n with eps=0, n=3
    ref = fac * (data.theta - w.dpsi)
    assert np.max(np.abs(data.theta_eps[1:] - ref[1:])) <= 1e-7
    ref_sig = fac[:, None, None] * data.sigma
    assert np.max(np.abs(data.sigma_eps[1:] - ref_sig[1:])) <= 1e-7
    assert data.diagnostics["b_symmetry"] <= 1e-8


def test_riccati_residual_small():
    assert lz.riccati_residual(mink_data()) <= 1e-6
    path = integrate_geodesic(FLRW4, [0.0, 0.1, 0.2, -0.1],
                              [1, 0, 0, 0], 1.4)
    data = lz.lagrange_tensor(FLRW4, path, 1.0)
    assert lz.riccati_residual(data) <= 1e-4
    wpath = integrate_geodesic(WMINK4, [0.1, 0.2, -0.1, 0.3],
                               [1, 0, 0, 0], 2.5)
    wdata = lz.lagrange_tensor(WMINK4, wpath, 0.5)
    assert lz.riccati_residual(wdata) <= 1e-4
    # eps override recomputes the deformation on the fly
    assert lz.riccati_residual(wdata, eps=0.0) <= 1e-4


# ------------------------------------------------------------ raychaudhuri

def test_raychaudhuri_equality_minkowski():
    rep = lz.check_raychaudhuri(mink_data(), 3.0)
    assert rep.verdict == "pass"
    assert rep.max_violation <= 1e-4
    # isotropic flow saturates the bound: residual stays near zero
    assert rep.diagnostics["min_residual"] >= -1e-4


def test_raychaudhuri_equality_flrw():
    path = integrate_geodesic(FLRW4, [0.0, 0.1, 0.2, -0.1],
                              [1, 0, 0, 0], 1.4)
    data = lz.lagrange_tensor(FLRW4, path, 1.0)
    rep = lz.check_raychaudhuri(data, 3.0)
    assert rep.verdict == "pass"
    assert rep.max_violation <= 1e-4
    assert rep.diagnostics["min_residual"] >= -1e-4


def test_raychaudhuri_weighted_regimes():
    path = integrate_geodesic(WMINK4, [0.1, 0.2, -0.1, 0.3],
                              [1, 0, 0, 0], 2.5)
    for N, eps in ((np.inf, 0.0), (5.0, 0.9), (-2.0, 0.5), (0.0, 0.0)):
        data = lz.lagrange_tensor(WMINK4, path, eps)
        rep = lz.check_raychaudhuri(data, N)
        assert rep.verdict == "pass", (N, eps, rep.max_violation)
    # N = 0 with eps = 0 has c = 1/n: equality up to solver error
    data = lz.lagrange_tensor(WMINK4, path, 0.0)
    rep = lz.check_raychaudhuri(data, 0.0)
    assert rep.max_violation <= 1e-4


def test_raychaudhuri_rejects_forbidden_n():
    with pytest.raises(ValidationError):
        lz.check_raychaudhuri(mink_data(), 1.5)


def test_raychaudhuri_rejects_eps_outside_range():
    with pytest.raises(ValidationError):
        lz.check_raychaudhuri(mink_data(), np.inf, eps=1.5)


# ------------------------------------------------------------ bonnet-myers

def test_bishop_myers_static_sphere_green():
    ss = static_sphere()
    pars = comparison_params(ss, np.inf, 0.0, 1.0)
    rep = lz.check_spacetime_bishop_myers(
        ss, pars, [([0.0, 1.0, 0.0], [math.sqrt(2.0), 0.0, 1.0])],
        density=lambda x: 1.0)
    assert rep.verdict == "pass"
    assert abs(rep.diagnostics["t0"][0] - math.pi) <= 1e-6
    assert rep.diagnostics["t0"][0] <= rep.diagnostics["bound_t"]


def test_bishop_myers_flrw_no_conjugate_in_chart():
    pars = comparison_params(FLRW4, 3.0, 1.0, 3.0)
    rep = lz.check_spacetime_bishop_myers(
        FLRW4, pars, [([0.0, 0.1, -0.2, 0.05], [1, 0, 0, 0])])
    assert rep.verdict == "fail"
    assert math.isinf(rep.max_violation)
    assert "no conjugate point" in rep.diagnostics["notes"][0]
    # the differential inequality itself holds on the reachable window
    assert rep.diagnostics["bishop_max"][0] <= 1e-3


def test_bishop_myers_weighted_minkowski_no_conjugate():
    pars = comparison_params(WMINK4, 0.0, 0.0, 0.5, 1.0, 1.2)
    rep = lz.check_spacetime_bishop_myers(
        WMINK4, pars, [([0.1, 0.2, -0.1, 0.3], [1, 0, 0, 0])])
    assert rep.verdict == "fail"
    assert "no conjugate point" in rep.diagnostics["notes"][0]


def test_bishop_myers_needs_positive_k():
    pars = comparison_params(MINK4, np.inf, 0.0, 0.0)
    with pytest.raises(ValidationError):
        lz.check_spacetime_bishop_myers(
            MINK4, pars, [([0, 0, 0, 0], [1, 0, 0, 0])])


# ------------------------------------------------------------ dalembertian

def test_radial_dalembertian_minkowski():
    path = integrate_geodesic(MINK4, [0, 0, 0, 0], [1, 0, 0, 0], 3.0)
    val = lz.radial_dalembertian(MINK4, path, 2.0)
    assert abs(val - 1.5) <= 1e-10


def test_radial_dalembertian_flrw():
    path = integrate_geodesic(FLRW4, [0.0, 0.1, 0.2, -0.1],
                              [1, 0, 0, 0], 1.4)
    val = lz.radial_dalembertian(FLRW4, path, 1.1)
    assert abs(val - 3.0 / math.tan(1.1)) <= 1e-8


def test_radial_dalembertian_weighted():
    path = integrate_geodesic(WMINK4, [0, 0, 0, 0], [1, 0, 0, 0], 3.0)
    w = weight_from_density(WMINK4, None, path)
    k = np.searchsorted(w.t, 2.0)
    val = lz.radial_dalembertian(WMINK4, path, float(w.t[k]))
    ref = 3.0 / w.t[k] - w.dpsi[k]
    assert abs(val - ref) <= 1e-8


def test_radial_dalembertian_domain_gates():
    path = integrate_geodesic(MINK4, [0, 0, 0, 0], [1, 0, 0, 0], 3.0)
    for t in (0.0, 5.0):
        with pytest.raises((ValidationError, NumericalError)):
            lz.radial_dalembertian(MINK4, path, t)


def test_lorentz_laplacian_comparison_passes():
    pars = comparison_params(MINK4, np.inf, 0.0, 0.0)
    rep = lz.check_lorentz_laplacian(MINK4, pars, [0, 0, 0, 0],
                                     [1, 0, 0, 0], 3.0)
    assert rep.verdict == "pass" and rep.name == "lorentz_laplacian"
    pars = comparison_params(FLRW4, 3.0, 1.0, 3.0)
    rep = lz.check_lorentz_laplacian(FLRW4, pars, [0.0, 0.1, 0.2, -0.1],
                                     [1, 0, 0, 0], 1.4)
    assert rep.verdict == "pass"
    pars = comparison_params(WMINK4, 0.0, 0.0, 0.0, 1.0, 1.3)
    rep = lz.check_lorentz_laplacian(WMINK4, pars, [0.1, 0.2, -0.1, 0.3],
                                     [1, 0, 0, 0], 2.0)
    assert rep.verdict == "pass"


# ---------------------------------------------------------- sector volumes

def test_sclv_minkowski_cone_ratio_exact():
    pars = comparison_params(MINK3, np.inf, 0.0, 0.0)
    sector = {"axis": [1.0, 0.0, 0.0], "angle": 0.4, "cut": 1.0}
    rep = lz.sclv_volume_check(MINK3, pars, [0, 0, 0], sector, 0.5, 1.0)
    assert rep.verdict == "pass"
    assert abs(rep.diagnostics["ratio"] - 8.0) <= 1e-9
    assert abs(rep.diagnostics["bound"] - 8.0) <= 1e-12


def test_sclv_minkowski_dim4():
    pars = comparison_params(MINK4, np.inf, 0.0, 0.0)
    sector = {"axis": [1.0, 0.0, 0.0, 0.0], "angle": 0.35, "cut": 1.0}
    rep = lz.sclv_volume_check(MINK4, pars, [0, 0, 0, 0], sector, 0.5, 1.0)
    assert rep.verdict == "pass"
    assert abs(rep.diagnostics["ratio"] - 16.0) <= 1e-9


def test_sclv_direction_dependent_cut():
    pars = comparison_params(MINK3, np.inf, 0.0, 0.0)
    cut = lambda v: 1.0 / (1.0 + 0.4 * v[1] / v[0])
    sector = {"axis": [1.0, 0.0, 0.0], "angle": 0.4, "cut": cut}
    rep = lz.sclv_volume_check(MINK3, pars, [0, 0, 0], sector, 0.4, 0.9)
    assert rep.verdict == "pass"
    assert rep.diagnostics["case"] == "B"
    # star-shaped scaling still gives the exact (R/r)^(n+1) ratio
    assert abs(rep.diagnostics["ratio"] - (0.9 / 0.4) ** 3) <= 1e-9


def test_sclv_weighted_and_curved():
    wm3 = build_zoo("weighted_minkowski", {"dim": 3, "lam": 0.25})
    pars = comparison_params(wm3, 0.0, 0.0, 0.0, 1.0, 1.3)
    sector = {"axis": [1.0, 0.0, 0.0], "angle": 0.35, "cut": 1.0}
    rep = lz.sclv_volume_check(wm3, pars, [0, 0, 0], sector, 0.5, 1.0)
    assert rep.verdict == "pass"
    assert rep.diagnostics["ratio"] <= rep.diagnostics["bound"]
    flrw3 = build_zoo("flrw", {"dim": 3, "profile": "cos"})
    pf = comparison_params(flrw3, 2.0, 1.0, 2.0)
    sf = {"axis": [1.0, 0.0, 0.0], "angle": 0.3, "cut": 1.2}
    rep = lz.sclv_volume_check(flrw3, pf, [0.0, 0.05, -0.1], sf, 0.5, 1.0)
    assert rep.verdict == "pass"
    assert rep.diagnostics["ratio"] <= rep.diagnostics["bound"]


def test_sclv_input_gates():
    pars = comparison_params(MINK3, np.inf, 0.0, 0.0)
    sector = {"axis": [1.0, 0.0, 0.0], "angle": 0.4, "cut": 1.0}
    with pytest.raises(ValidationError):
        lz.sclv_volume_check(MINK3, pars, [0, 0, 0], sector, 0.9, 0.4)
    with pytest.raises(ValidationError):
        lz.sclv_volume_check(MINK3, pars, [0, 0, 0],
                             {"axis": [1, 0, 0], "angle": 1.6, "cut": 1.0},
                             0.4, 0.9)
    with pytest.raises(ValidationError):
        lz.sclv_volume_check(MINK3, pars, [0, 0, 0],
                             {"axis": [1, 0, 0], "cut": 1.0}, 0.4, 0.9)
    pk = comparison_params(MINK3, np.inf, 0.0, 1.0)
    with pytest.raises(ValidationError):
        lz.sclv_volume_check(MINK3, pk, [0, 0, 0],
                             {"axis": [1, 0, 0], "angle": 0.4,
                              "cut": lambda v: 1.0}, 0.4, 0.9)
    eu = build_zoo("euclidean", {"n": 3})
    pe = comparison_params(eu, np.inf, 0.0, 0.0)
    with pytest.raises(ValidationError):
        lz.sclv_volume_check(eu, pe, [0, 0, 0], sector, 0.4, 0.9)


# --------------------------------------------------------- hessian symmetry

def test_hessian_flat_time_function():
    rep = lz.hessian_symmetry_check(MINK4, lambda x: x[0],
                                    [0.3, 0.1, -0.2, 0.0])
    assert rep.verdict == "pass"
    assert np.allclose(rep.diagnostics["gradient"], [1, 0, 0, 0], atol=1e-10)
    assert np.max(np.abs(rep.diagnostics["hessian"])) <= 1e-10


def test_hessian_flrw_time_function_values():
    x = [0.2, 0.1, -0.3, 0.05]
    rep = lz.hessian_symmetry_check(FLRW4, lambda xx: xx[0], x)
    assert rep.verdict == "pass"
    M = np.array(rep.diagnostics["hessian"])
    aa = math.cos(0.2) * (-math.sin(0.2))
    assert np.allclose(np.diag(M), [0.0, aa, aa, aa], atol=1e-9)
    assert np.max(np.abs(M - np.diag(np.diag(M)))) <= 1e-9


def test_hessian_symmetry_mixing_functions():
    fmix = lambda x: x[0] * (1.0 + 0.08 * x[1]) + 0.05 * x[2]
    rep = lz.hessian_symmetry_check(FLRW4, fmix, [0.2, 0.1, -0.3, 0.05])
    assert rep.verdict == "pass"
    M = np.array(rep.diagnostics["hessian"])
    assert abs(M[0, 1]) > 1e-3  # the symmetry statement is not vacuous
    fb = lambda x: d.sqrt(1.0 + x[0] * x[0]) * (1.0 + 0.05 * x[1]) \
        + 0.03 * x[1]
    rep = lz.hessian_symmetry_check(MINK4, fb, [0.6, 0.2, -0.1, 0.3])
    assert rep.verdict == "pass"
    assert rep.diagnostics["gradient_identity"] <= 1e-9


def test_hessian_beem_quartic():
    s = math.sqrt(0.5)
    fq = lambda x: s * (x[0] + x[1]) * (1.0 + 0.05 * (x[0] - x[1]))
    rep = lz.hessian_symmetry_check(BEEM, fq, [0.1, -0.2])
    assert rep.verdict == "pass"
    assert rep.diagnostics["symmetry"] <= 1e-10


def test_hessian_rejects_non_temporal():
    with pytest.raises(AdmissibilityError):
        lz.hessian_symmetry_check(MINK4, lambda x: -x[0], [0, 0, 0, 0])
    with pytest.raises(AdmissibilityError):
        lz.hessian_symmetry_check(MINK4, lambda x: x[1], [0, 0, 0, 0])
