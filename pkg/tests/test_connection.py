"""Connection data and geodesics against closed-form flows.

Reference solutions: straight lines on flat spaces, tan/tanh radial
geodesics in the stereographic sphere and ball charts, comoving observers
in warped products, and hand-computed flat covariant derivatives.
"""

import math

import numpy as np
import pytest

from finslercomp import _dual as d
from finslercomp import _engine as eng
from finslercomp.connection import (
    Bundle, ConnectionData, GeodesicPath, connection_at,
    covariant_derivative, exponential_map, integrate_bundle,
    integrate_geodesic,
)
from finslercomp.core import ChartedSpace, Pt, Vec
from finslercomp.errors import ValidationError
from finslercomp.zoo import build_zoo


def test_connection_at_shapes_and_base():
    sp = build_zoo("sphere", {"n": 2})
    c = connection_at(sp, [0.1, 0.2], [1.0, -0.5])
    assert c.gamma.shape == (2, 2, 2)
    assert c.spray.shape == (2,)
    assert c.nonlinear.shape == (2, 2)
    assert c.chern.shape == (2, 2, 2)
    assert np.allclose(c.base[0].coords, [0.1, 0.2])


def test_spray_two_homogeneity():
    sp = build_zoo("randers", {"n": 3, "b": 0.3})
    x = [0.2, -0.1, 0.4]
    v = [0.7, 0.2, -0.5]
    c1 = connection_at(sp, x, v)
    c2 = connection_at(sp, x, [1.7 * u for u in v])
    assert np.allclose(c2.spray, 1.7 ** 2 * c1.spray, atol=1e-7)


def test_nonlinear_connection_euler_identity():
    # N^i_j v^j = 2 G^i (1-homogeneity of N in v)
    sp = build_zoo("flrw", {"dim": 3, "profile": "cos"})
    x = [0.3, 0.1, -0.2]
    v = [1.0, 0.4, 0.1]
    c = connection_at(sp, x, v)
    assert np.allclose(c.nonlinear @ v, 2.0 * c.spray, atol=1e-7)


def test_chern_equals_gamma_riemannian():
    sp = build_zoo("poincare_ball", {"n": 2})
    c = connection_at(sp, [0.2, -0.3], [0.5, 1.0])
    assert np.allclose(c.chern, c.gamma, atol=1e-11)
    assert np.max(np.abs(c.gamma)) > 0.1


def scaled_randers():
    # conformally scaled Randers metric: x-dependent and non-Riemannian,
    # so Chern and formal Christoffel coefficients genuinely differ
    def lag(x, v):
        f = d.sqrt(v[0] * v[0] + v[1] * v[1]) + 0.3 * v[0]
        return 0.5 * d.exp(2.0 * x[0]) * f * f

    return ChartedSpace(2, "positive", lag, name="scaled_randers")


def test_chern_symmetric_and_spray_collapse():
    sp = scaled_randers()
    x = [0.1, -0.2]
    v = [0.8, 0.5]
    c = connection_at(sp, x, v)
    assert np.max(np.abs(c.chern - c.gamma)) > 1e-3
    assert np.allclose(c.chern, np.transpose(c.chern, (0, 2, 1)), atol=1e-9)
    # Cartan corrections vanish on double contraction with the flagpole
    va = np.asarray(v)
    quad_chern = np.einsum("ijk,j,k->i", c.chern, va, va)
    assert np.allclose(quad_chern, 2.0 * c.spray, atol=1e-8)


def test_covariant_derivative_flat_directional():
    sp = build_zoo("euclidean", {"n": 2})
    field = lambda x: [x[1] * x[1], x[0] * x[1]]
    a, b = 0.4, -0.7
    v = Vec([1.0, 2.0], Pt([a, b]))
    out = covariant_derivative(sp, field, v)
    assert np.allclose(out.coords, [2 * b * 2.0, 1.0 * b + 2.0 * a], atol=1e-12)


def test_covariant_derivative_expression_components():
    sp = build_zoo("euclidean", {"n": 2})
    field = [["mul", "x1", "x1"], ["mul", "x0", "x1"]]
    v = Vec([1.0, 2.0], Pt([0.4, -0.7]))
    out = covariant_derivative(sp, field, v)
    want = covariant_derivative(sp, lambda x: [x[1] * x[1], x[0] * x[1]], v)
    assert np.allclose(out.coords, want.coords, atol=1e-13)


def test_covariant_derivative_metric_compatibility_sphere():
    # d/dt g(Z, Z) = 2 g(D_t Z, Z) along a geodesic, checked at one point
    # via finite differences of g_{eta'}(Z, Z)
    sp = build_zoo("sphere", {"n": 2})
    path = integrate_geodesic(sp, [0.1, 0.0], [0.35, 0.2], 1.0)
    field = lambda x: [x[1] * x[1] + 1.0, x[0]]

    def gzz(t):
        x, v = path.interp(t)
        g = eng.metric(sp.lagrangian, 2, list(x), list(v))
        z = field(list(x))
        return sum(float(d.real(g[i][j])) * z[i] * z[j]
                   for i in range(2) for j in range(2))

    t0 = 0.4
    h = 1e-5
    fd = (gzz(t0 + h) - gzz(t0 - h)) / (2 * h)
    x, v = path.interp(t0)
    vv = Vec(v, Pt(list(x)))
    Dz = covariant_derivative(sp, field, vv)
    g = eng.metric(sp.lagrangian, 2, list(x), list(v))
    z = field(list(x))
    inner = 2 * sum(float(d.real(g[i][j])) * Dz.coords[i] * z[j]
                    for i in range(2) for j in range(2))
    assert fd == pytest.approx(inner, rel=1e-5, abs=1e-7)


def test_covariant_derivative_requires_vec():
    sp = build_zoo("euclidean", {"n": 2})
    with pytest.raises(ValidationError):
        covariant_derivative(sp, lambda x: [1.0, 0.0], [1.0, 0.0])


def test_geodesic_sphere_radial_tan():
    # unit-speed radial geodesic from the chart center: x(t) = tan(t/2) e1
    sp = build_zoo("sphere", {"n": 2})
    path = integrate_geodesic(sp, [0.0, 0.0], [0.5, 0.0], 2.0)
    for t in (0.5, 1.0, 1.7):
        x, v = path.interp(t)
        assert x[0] == pytest.approx(math.tan(t / 2), rel=1e-7)
        assert abs(x[1]) < 1e-9
    assert path.lagrangian_drift < 1e-8
    assert path.reached_t_end


def test_geodesic_poincare_radial_tanh():
    sp = build_zoo("poincare_ball", {"n": 2})
    path = integrate_geodesic(sp, [0.0, 0.0], [0.5, 0.0], 3.0)
    for t in (0.5, 1.5, 2.8):
        x, v = path.interp(t)
        assert x[0] == pytest.approx(math.tanh(t / 2), rel=1e-7)


def test_geodesic_flat_randers_straight():
    sp = build_zoo("randers", {"n": 3, "b": 0.3})
    x0 = [0.1, 0.2, -0.3]
    v0 = [0.4, -0.2, 0.5]
    path = integrate_geodesic(sp, x0, v0, 2.0)
    x, v = path.interp(1.37)
    assert np.allclose(x, np.asarray(x0) + 1.37 * np.asarray(v0), atol=1e-9)
    assert np.allclose(v, v0, atol=1e-9)


def test_geodesic_flrw_comoving():
    sp = build_zoo("flrw", {"dim": 3, "profile": "cos"})
    path = integrate_geodesic(sp, [0.0, 0.3, -0.2], [1.0, 0.0, 0.0], 1.2)
    x, v = path.interp(1.2)
    assert np.allclose(x, [1.2, 0.3, -0.2], atol=1e-9)
    assert np.allclose(v, [1.0, 0.0, 0.0], atol=1e-9)


def test_geodesic_stops_at_chart_margin():
    # cos-profile chart ends at |x0| = pi/2; a comoving path must stop early
    sp = build_zoo("flrw", {"dim": 3, "profile": "cos"})
    path = integrate_geodesic(sp, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 5.0)
    assert not path.reached_t_end
    assert path.t_grid[-1] < math.pi / 2
    assert path.t_grid[-1] > 1.5


def test_geodesic_reparametrization_property():
    # eta_{c v}(t) = eta_v(c t)
    sp = build_zoo("sphere", {"n": 2})
    x0, v0, c = [0.2, -0.1], [0.3, 0.4], 1.6
    p1 = integrate_geodesic(sp, x0, v0, 1.6)
    p2 = integrate_geodesic(sp, x0, [c * u for u in v0], 1.0)
    x1, v1 = p1.interp(c * 0.55)
    x2, v2 = p2.interp(0.55)
    assert np.allclose(x1, x2, atol=1e-8)
    assert np.allclose(c * np.asarray(v1), v2, atol=1e-8)


def test_exponential_map_zero_and_consistency():
    sp = build_zoo("sphere", {"n": 2})
    p0 = exponential_map(sp, [0.3, 0.1], [0.0, 0.0])
    assert np.allclose(p0.coords, [0.3, 0.1])
    p1 = exponential_map(sp, [0.0, 0.0], [0.5, 0.0])
    assert p1.coords[0] == pytest.approx(math.tan(0.5), rel=1e-7)


def test_geodesic_csv_round_numbers(tmp_path):
    sp = build_zoo("euclidean", {"n": 2})
    path = integrate_geodesic(sp, [0.0, 0.0], [1.0, 0.5], 1.0)
    f = tmp_path / "geo.csv"
    path.write_csv(str(f))
    lines = f.read_text().strip().splitlines()
    assert lines[0] == "t,x0,x1,v0,v1,L"
    last = [float(u) for u in lines[-1].split(",")]
    assert last[0] == pytest.approx(1.0)
    assert last[1] == pytest.approx(1.0, abs=1e-9)
    assert last[5] == pytest.approx(0.625, abs=1e-12)


def test_bundle_matches_individual_integration():
    sp = build_zoo("sphere", {"n": 2})
    X0 = [[0.1, 0.0], [0.0, 0.2]]
    V0 = [[0.3, 0.2], [-0.1, 0.4]]
    bundle = integrate_bundle(sp, X0, V0, 1.5, n_steps=60)
    assert bundle.n_paths == 2
    assert bundle.drift < 1e-8
    for p in range(2):
        path = integrate_geodesic(sp, X0[p], V0[p], 1.5,
                                  t_eval=bundle.t)
        assert np.allclose(bundle.X[p], path.points, atol=1e-7)
        assert np.allclose(bundle.V[p], path.velocities, atol=1e-7)


def test_bundle_valid_len_truncates_at_chart():
    sp = build_zoo("flrw", {"dim": 3, "profile": "cos"})
    # one comoving path; horizon 1.45 stays inside, margin floor cuts the tail
    b = integrate_bundle(sp, [[0.0, 0.0, 0.0]], [[1.0, 0.0, 0.0]], 1.45,
                         n_steps=100, margin_floor=0.2)
    assert b.valid_len[0] < 101
    t_cut = b.t[b.valid_len[0] - 1]
    assert t_cut <= math.pi / 2 - 0.2 + 1e-9


def test_bundle_shape_validation():
    sp = build_zoo("euclidean", {"n": 2})
    with pytest.raises(ValidationError):
        integrate_bundle(sp, [[0.0, 0.0]], [[1.0, 0.0, 0.0]], 1.0)
