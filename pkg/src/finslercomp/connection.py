"""Sprays, nonlinear/Chern connection data, and geodesic integration.

Geodesics solve eta'' + 2 G(eta, eta') = 0. Single paths use an adaptive
solver with a chart-margin stopping event; families of geodesics sharing a
time grid are integrated as one flattened system with array-valued
components flowing through the same differentiation engine.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import _dual as d
from . import _engine as eng
from .core import Pt, Vec, as_coord_list, check_admissible
from .errors import NumericalError, ValidationError
from .expressions import parse_expression
from .report import write_csv

MARGIN_FLOOR = 1e-3


@dataclass(frozen=True)
class ConnectionData:
    """Pointwise connection coefficients for a fixed flagpole v."""

    gamma: np.ndarray      # formal Christoffel symbols of g_v, (n, n, n)
    spray: np.ndarray      # geodesic spray G^i, (n,)
    nonlinear: np.ndarray  # N^i_j = dG^i/dv^j, (n, n)
    chern: np.ndarray      # Chern connection coefficients, (n, n, n)
    base: tuple


def connection_at(space, x, v):
    xl, vl = check_admissible(space, x, v)
    n = space.dim
    L = space.lagrangian

    def floats(obj, shape):
        flat = np.array([float(d.real(u)) for u in _walk(obj)])
        return flat.reshape(shape)

    gam = floats(eng.gamma(L, n, xl, vl), (n, n, n))
    G = floats(eng.spray(L, n, xl, vl), (n,))
    N = floats(eng.nonlinear(L, n, xl, vl), (n, n))
    ch = floats(eng.chern(L, n, xl, vl), (n, n, n))
    return ConnectionData(gam, G, N, ch, (Pt(xl), Vec(vl, Pt(xl))))


def _walk(obj):
    if isinstance(obj, list):
        for item in obj:
            yield from _walk(item)
    else:
        yield obj


def covariant_derivative(space, field, v, ref=None):
    """Chern covariant derivative of a vector field in direction v.

    field: callable x -> components, or a list of expression trees (one per
    component). v is the direction (a Vec or coordinates with a base point
    required via Vec). ref is the reference vector fixing the connection
    coefficients; defaults to v itself.
    """
    if not isinstance(v, Vec):
        raise ValidationError("direction must be a Vec carrying its base point")
    x = as_coord_list(v.base)
    vl = as_coord_list(v)
    refl = vl if ref is None else as_coord_list(ref)
    n = space.dim
    if not callable(field):
        comps = [parse_expression(c, n, slots=("x",)) for c in field]
        field = lambda xc: [comp(xc) for comp in comps]

    z0 = [float(d.real(u)) for u in field(x)]
    if len(z0) != n:
        raise ValidationError("field has %d components, expected %d" % (len(z0), n))
    dz = np.empty((n, n))  # dz[j][i] = d field^i / d x^j
    for j in range(n):
        lv = d.fresh_level()
        xs = list(x)
        xs[j] = d.Dual(lv, xs[j], 1.0)
        fz = field(xs)
        for i in range(n):
            dz[j, i] = float(d.real(d.eps_part(fz[i], lv)))

    conn = connection_at(space, x, refl)
    va = np.asarray(vl)
    za = np.asarray(z0)
    out = va @ dz + np.einsum("ijk,j,k->i", conn.chern, va, za)
    return Vec(out, Pt(x))


class GeodesicPath:
    """One integrated geodesic with dense evaluation.

    interp(t) returns (x(t), v(t)); lagrangian_drift is the largest relative
    change of L(eta') over the stored grid (exactly conserved in theory).
    """

    __slots__ = ("t_grid", "points", "velocities", "interp",
                 "lagrangian_drift", "reached_t_end", "space")

    def __init__(self, t_grid, points, velocities, interp,
                 lagrangian_drift, reached_t_end, space):
        self.t_grid = t_grid
        self.points = points
        self.velocities = velocities
        self.interp = interp
        self.lagrangian_drift = lagrangian_drift
        self.reached_t_end = reached_t_end
        self.space = space

    def __call__(self, t):
        return self.interp(t)

    def write_csv(self, path):
        n = self.points.shape[1]
        L = self.space.lagrangian
        lvals = eng_l_batch(L, self.points, self.velocities)
        header = (["t"] + ["x%d" % i for i in range(n)]
                  + ["v%d" % i for i in range(n)] + ["L"])
        cols = ([self.t_grid] + [self.points[:, i] for i in range(n)]
                + [self.velocities[:, i] for i in range(n)] + [lvals])
        write_csv(path, header, cols)


def eng_l_batch(L, X, V):
    n = X.shape[1]
    xb = [X[:, i] for i in range(n)]
    vb = [V[:, i] for i in range(n)]
    out = d.real(L(xb, vb))
    return np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],)).copy()


def _margin_event(space):
    floor = MARGIN_FLOOR
    if space.chart_margin is None:
        return None

    def ev(t, y):
        n = space.dim
        return space.chart_margin(list(y[:n])) - floor

    ev.terminal = True
    ev.direction = -1
    return ev


def integrate_geodesic(space, x0, v0, t_end, tol=1e-9, t_eval=None):
    """Solve the geodesic equation from (x0, v0) up to t_end.

    Stops early (reached_t_end False) if the path approaches the chart
    boundary. tol drives the adaptive relative tolerance; the absolute
    tolerance sits three decades below it.
    """
    xl, vl = check_admissible(space, x0, v0)
    n = space.dim
    L = space.lagrangian

    def rhs(t, y):
        x = list(y[:n])
        v = list(y[n:])
        G = eng.spray(L, n, x, v)
        return np.concatenate([y[n:], [-2.0 * float(d.real(g)) for g in G]])

    events = _margin_event(space)
    sol = solve_ivp(rhs, (0.0, float(t_end)), np.concatenate([xl, vl]),
                    method="RK45", rtol=tol, atol=tol * 1e-3,
                    dense_output=True, t_eval=t_eval,
                    events=[events] if events else None)
    if sol.status == -1:
        raise NumericalError("geodesic integration failed: %s" % sol.message)
    t_grid = sol.t
    if t_grid.size < 2:
        raise NumericalError("geodesic stopped immediately (chart boundary)")
    states = sol.y.T
    points = states[:, :n].copy()
    velocities = states[:, n:].copy()

    dense = sol.sol

    def interp(t):
        y = dense(t)
        return y[:n], y[n:]

    l0 = eng_l_batch(L, points[:1], velocities[:1])[0]
    lall = eng_l_batch(L, points, velocities)
    drift = float(np.max(np.abs(lall - l0)) / max(1.0, abs(l0)))
    return GeodesicPath(t_grid, points, velocities, interp, drift,
                        sol.status == 0, space)


def exponential_map(space, x, v, t_end=1.0):
    """exp_x(t_end * v) as a Pt; the zero vector maps to x itself."""
    xl = [float(c) for c in as_coord_list(x)]
    vl = as_coord_list(v)
    if float(np.linalg.norm(vl)) == 0.0:
        return Pt(xl)
    path = integrate_geodesic(space, xl, vl, t_end)
    if not path.reached_t_end:
        raise NumericalError(
            "geodesic left the chart before t = %g (reached %g)"
            % (t_end, path.t_grid[-1]))
    return Pt(path.points[-1])


class Bundle:
    """Family of geodesics on one shared time grid.

    X, V have shape (paths, len(t), dim). valid_len[p] is the number of
    leading grid nodes of path p that stay inside the chart with margin.
    """

    __slots__ = ("t", "X", "V", "valid_len", "drift", "space")

    def __init__(self, t, X, V, valid_len, drift, space):
        self.t = t
        self.X = X
        self.V = V
        self.valid_len = valid_len
        self.drift = drift
        self.space = space

    @property
    def n_paths(self):
        return self.X.shape[0]


def integrate_bundle(space, X0, V0, t_end, n_steps=400, tol=1e-9,
                     margin_floor=1e-2):
    """Integrate many geodesics as one flattened system on a uniform grid."""
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    V0 = np.atleast_2d(np.asarray(V0, dtype=float))
    P, n = X0.shape
    if V0.shape != (P, n) or n != space.dim:
        raise ValidationError("bundle seeds must share shape (paths, dim)")
    L = space.lagrangian
    t_grid = np.linspace(0.0, float(t_end), int(n_steps) + 1)

    def rhs(t, y):
        S = y.reshape(P, 2 * n)
        xb = [S[:, i] for i in range(n)]
        vb = [S[:, n + i] for i in range(n)]
        G = eng.spray(L, n, xb, vb)
        out = np.empty((P, 2 * n))
        out[:, :n] = S[:, n:]
        for i in range(n):
            out[:, n + i] = -2.0 * np.broadcast_to(
                np.asarray(d.real(G[i]), dtype=float), (P,))
        return out.ravel()

    y0 = np.hstack([X0, V0]).ravel()
    sol = solve_ivp(rhs, (0.0, float(t_end)), y0, method="RK45",
                    rtol=tol, atol=tol * 1e-3, t_eval=t_grid)
    if sol.status != 0:
        raise NumericalError("bundle integration failed: %s" % sol.message)
    T = t_grid.size
    states = sol.y.reshape(P, 2 * n, T)
    X = np.transpose(states[:, :n, :], (0, 2, 1)).copy()
    V = np.transpose(states[:, n:, :], (0, 2, 1)).copy()

    valid_len = np.full(P, T, dtype=int)
    if space.chart_margin is not None:
        for p in range(P):
            margins = np.array([space.chart_margin(list(X[p, k]))
                                for k in range(T)])
            bad = np.nonzero(margins <= margin_floor)[0]
            if bad.size:
                valid_len[p] = int(bad[0])

    l0 = eng_l_batch(L, X[:, 0, :], V[:, 0, :])
    drift = 0.0
    for p in range(P):
        m = valid_len[p]
        lv = eng_l_batch(L, X[p, :m], V[p, :m])
        drift = max(drift, float(np.max(np.abs(lv - l0[p])) / max(1.0, abs(l0[p]))))
    return Bundle(t_grid, X, V, valid_len, drift, space)
