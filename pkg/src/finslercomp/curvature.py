"""Curvature operator, flag/Ricci curvature, transverse Jacobi data.

Along a geodesic eta the transverse complement N_eta(t) = {w : g_eta'(eta',
w) = 0} carries a parallel g-orthonormal frame e_i(t) (covariant derivative
with reference vector eta' vanishes). Jacobi fields E_i with E_i(0) = 0,
D E_i(0) = e_i are integrated in frame components, Y' = Z, Z' = -Y rho,
where rho_ij = g(e_i, R(e_j)). The reported matrices follow the E-basis
convention: A = g-Gram of the E_i, B expands D E_i = sum_j b_ij E_j, and
Rmat_ij = g(R(E_i), E_j); then BA = AB^T (vanishing Wronskian) and
A' = 2BA hold up to grid error.
"""

import math

import numpy as np
from scipy.interpolate import CubicSpline, InterpolatedUnivariateSpline
from scipy.optimize import brentq

from . import _dual as d
from . import _engine as eng
from .core import check_admissible
from .errors import NumericalError, ValidationError
from .report import write_csv


def _floats_matrix(obj, n):
    return np.array([[float(d.real(obj[i][j])) for j in range(n)]
                     for i in range(n)])


def curvature_operator(space, x, v):
    """R^i_j(v) as an (n, n) array; R_v(v) = 0 and g_v(v, R_v(.)) = 0 hold."""
    xl, vl = check_admissible(space, x, v)
    return _floats_matrix(eng.curvature(space.lagrangian, space.dim, xl, vl),
                          space.dim)


def ricci_scalar(space, x, v):
    xl, vl = check_admissible(space, x, v)
    return float(d.real(eng.ricci(space.lagrangian, space.dim, xl, vl)))


def flag_curvature(space, x, v, w):
    """Flag curvature of the flag (v; w), lorentzian sign flipped so that
    warped products with sphere-like profiles give positive values."""
    xl, vl = check_admissible(space, x, v)
    n = space.dim
    g = _floats_matrix(eng.metric(space.lagrangian, n, xl, vl), n)
    R = _floats_matrix(eng.curvature(space.lagrangian, n, xl, vl), n)
    va = np.asarray(vl)
    wa = np.asarray([float(c) for c in np.asarray(w, dtype=float).reshape(-1)]) \
        if not hasattr(w, "coords") else np.asarray(w.coords, dtype=float)
    gvv = float(va @ g @ va)
    gww = float(wa @ g @ wa)
    gvw = float(va @ g @ wa)
    num = float(wa @ g @ (R @ wa))
    den = gvv * gww - gvw * gvw
    scale = abs(gvv * gww) + gvw * gvw
    if abs(den) <= 1e-10 * max(1.0, scale):
        raise ValidationError("degenerate flag: w is (numerically) parallel to v")
    if space.signature == "positive":
        return num / den
    return -num / den


def grid_eval_matrix(fn, L, n, X, V):
    """Evaluate an engine (n x n)-matrix function on a (T, n) grid batch."""
    T = X.shape[0]
    xb = [X[:, i] for i in range(n)]
    vb = [V[:, i] for i in range(n)]
    M = fn(L, n, xb, vb)
    out = np.empty((T, n, n))
    for i in range(n):
        for j in range(n):
            out[:, i, j] = np.broadcast_to(
                np.asarray(d.real(M[i][j]), dtype=float), (T,))
    return out


def grid_metric(L, n, X, V):
    return grid_eval_matrix(eng.metric, L, n, X, V)


def grid_curvature(L, n, X, V):
    return grid_eval_matrix(eng.curvature, L, n, X, V)


def grid_chern_hv(L, n, X, V):
    return grid_eval_matrix(eng.chern_hv, L, n, X, V)


def grid_ricci(L, n, X, V):
    T = X.shape[0]
    xb = [X[:, i] for i in range(n)]
    vb = [V[:, i] for i in range(n)]
    r = eng.ricci(L, n, xb, vb)
    return np.broadcast_to(np.asarray(d.real(r), dtype=float), (T,)).copy()


def transverse_frame_at(gmat, v):
    """g-orthonormal basis (rows) of the g-orthogonal complement of v."""
    n = len(v)
    va = np.asarray(v, dtype=float)
    gv = gmat @ va
    gvv = float(va @ gv)
    basis = []
    for a in range(n):
        w = np.zeros(n)
        w[a] = 1.0
        w = w - (gv[a] / gvv) * va
        for b in basis:
            w = w - float(b @ gmat @ w) * b
        nrm2 = float(w @ gmat @ w)
        if nrm2 > 1e-8:
            basis.append(w / math.sqrt(nrm2))
        if len(basis) == n - 1:
            break
    if len(basis) < n - 1:
        raise NumericalError("could not complete a transverse frame")
    return np.array(basis)


def _adjugate(M):
    m = M.shape[-1]
    if m == 1:
        return np.ones_like(M)
    if m == 2:
        out = np.empty_like(M)
        out[..., 0, 0] = M[..., 1, 1]
        out[..., 1, 1] = M[..., 0, 0]
        out[..., 0, 1] = -M[..., 0, 1]
        out[..., 1, 0] = -M[..., 1, 0]
        return out
    if m == 3:
        out = np.empty_like(M)
        for i in range(3):
            for j in range(3):
                r = [k for k in range(3) if k != j]
                c = [k for k in range(3) if k != i]
                minor = (M[..., r[0], c[0]] * M[..., r[1], c[1]]
                         - M[..., r[0], c[1]] * M[..., r[1], c[0]])
                out[..., i, j] = ((-1) ** (i + j)) * minor
        return out
    return np.linalg.det(M)[..., None, None] * np.linalg.pinv(M)


class TransverseData:
    """Parallel transverse frame and Jacobi matrices along one geodesic.

    frame[k, i] holds the coordinates of e_i(t_k); Y[k] the frame
    components of the Jacobi fields (rows), with Yp its t-derivative, so
    A = Y Y^T, B = Y' Y^{-1}, Rmat = Y rho Y^T. B[0] is NaN (Y(0) = 0).
    """

    __slots__ = ("path", "frame", "A", "B", "Rmat", "m", "t", "Y", "Yp",
                 "detY", "rho", "diagnostics")

    def __init__(self, path, frame, A, B, Rmat, m, t, Y, Yp, detY, rho,
                 diagnostics):
        self.path = path
        self.frame = frame
        self.A = A
        self.B = B
        self.Rmat = Rmat
        self.m = m
        self.t = t
        self.Y = Y
        self.Yp = Yp
        self.detY = detY
        self.rho = rho
        self.diagnostics = diagnostics

    def write_csv(self, fname, entries=False):
        header = ["t", "detA", "traceB"]
        cols = [self.t, np.linalg.det(self.A),
                np.trace(self.B, axis1=1, axis2=2)]
        if entries:
            for nm, M in (("A", self.A), ("B", self.B), ("R", self.Rmat)):
                for i in range(self.m):
                    for j in range(self.m):
                        header.append("%s%d%d" % (nm, i, j))
                        cols.append(M[:, i, j])
        write_csv(fname, header, cols)


def transverse_data(space, path, n_steps=400):
    """Integrate the parallel frame and the Jacobi matrix Y along a path.

    The frame and the (Y, Y') system run through one fixed-step RK4 cascade
    on a grid twice as fine as the output grid, with the metric, curvature
    and transport matrices evaluated in a single batched pass.
    """
    n = space.dim
    m = n - 1
    L = space.lagrangian
    n_steps = int(n_steps)
    t_end = float(path.t_grid[-1])
    t = np.linspace(0.0, t_end, n_steps + 1)
    tq = np.linspace(0.0, t_end, 4 * n_steps + 1)
    xq, vq = path.interp(tq)
    Xq = np.asarray(xq).T.copy()
    Vq = np.asarray(vq).T.copy()

    g = grid_metric(L, n, Xq, Vq)
    R = grid_curvature(L, n, Xq, Vq)
    W = grid_chern_hv(L, n, Xq, Vq)
    gR = np.einsum("qab,qbc->qac", g, R)

    E = transverse_frame_at(g[0], Vq[0])
    Y = np.zeros((m, m))
    Z = np.eye(m)
    T = n_steps + 1
    E_t = np.empty((T, m, n))
    Y_t = np.empty((T, m, m))
    Z_t = np.empty((T, m, m))
    rho_t = np.empty((T, m, m))
    E_t[0], Y_t[0], Z_t[0] = E, Y, Z
    rho_t[0] = E @ gR[0] @ E.T

    def deriv(idx, Ec, Yc, Zc):
        rho = Ec @ gR[idx] @ Ec.T
        return -Ec @ W[idx].T, Zc, -Yc @ rho

    h = t_end / (2 * n_steps)
    for s in range(2 * n_steps):
        i0, ih, i1 = 2 * s, 2 * s + 1, 2 * s + 2
        k1 = deriv(i0, E, Y, Z)
        k2 = deriv(ih, E + 0.5 * h * k1[0], Y + 0.5 * h * k1[1],
                   Z + 0.5 * h * k1[2])
        k3 = deriv(ih, E + 0.5 * h * k2[0], Y + 0.5 * h * k2[1],
                   Z + 0.5 * h * k2[2])
        k4 = deriv(i1, E + h * k3[0], Y + h * k3[1], Z + h * k3[2])
        E = E + (h / 6) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        Y = Y + (h / 6) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        Z = Z + (h / 6) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if i1 % 4 == 0:
            k = i1 // 4
            E_t[k], Y_t[k], Z_t[k] = E, Y, Z
            rho_t[k] = E @ gR[i1] @ E.T

    A = np.einsum("tik,tjk->tij", Y_t, Y_t)
    detY = np.linalg.det(Y_t)
    with np.errstate(divide="ignore", invalid="ignore"):
        B = np.einsum("tik,tkj->tij", Z_t, _adjugate(Y_t)) \
            / detY[:, None, None]
    Rmat = np.einsum("tik,tkl,tjl->tij", Y_t, rho_t, Y_t)

    g_c = g[::4]
    v_c = Vq[::4]
    gv = np.einsum("tab,tb->ta", g_c, v_c)
    gauss = float(np.max(np.abs(np.einsum("tia,ta->ti", E_t, gv))))
    gram = np.einsum("tia,tab,tjb->tij", E_t, g_c, E_t) - np.eye(m)
    gram_drift = float(np.max(np.abs(gram)))
    rho_asym = float(np.max(np.abs(rho_t - np.transpose(rho_t, (0, 2, 1)))))
    if gram_drift > 1e-4:
        raise NumericalError(
            "parallel frame drifted from orthonormality by %g" % gram_drift)

    scale = float(np.max(np.abs(detY)))
    singular_t = None
    if scale > 0.0:
        small = np.nonzero(np.abs(detY[1:]) <= 1e-10 * scale)[0]
        if small.size:
            singular_t = float(t[1 + small[0]])
    diag = {"gauss_residual": gauss, "gram_drift": gram_drift,
            "rho_asymmetry": rho_asym, "singular_t": singular_t}
    return TransverseData(path, E_t, A, B, Rmat, m, t, Y_t, Z_t, detY,
                          rho_t, diag)


def first_conjugate_point(td):
    """Smallest t with det A(t) = 0 past the start, or None on this horizon.

    det A = (det Y)^2 only touches zero, so the detector tracks det Y,
    whose sign flips across a simple conjugate point; a near-tangency
    (|det Y| below 1e-10 of its running scale) also counts.
    """
    t, dY = td.t, td.detY
    if len(t) < 3:
        return None
    spl = CubicSpline(t, dY)
    dspl = spl.derivative()
    for k in range(1, len(t) - 1):
        a, b = dY[k], dY[k + 1]
        if a == 0.0:
            return float(t[k])
        if a * b < 0.0:
            return float(brentq(spl, t[k], t[k + 1], xtol=1e-12))
        if abs(a) <= abs(dY[k - 1]) and abs(a) < abs(b):
            # even-multiplicity zero: det Y only touches, so test the
            # spline minimum against the neighborhood scale
            lo, hi = max(0, k - 5), min(len(t) - 1, k + 5)
            near = float(np.max(np.abs(dY[lo:hi + 1])))
            if near > 0.0 and dspl(t[k - 1]) * dspl(t[k + 1]) < 0.0:
                tm = float(brentq(dspl, t[k - 1], t[k + 1], xtol=1e-12))
                if abs(float(spl(tm))) <= 1e-4 * near:
                    return tm
    return td.diagnostics["singular_t"]


def matrix_lemma_residuals(td):
    """Riccati-structure residuals of A = Y Y^T along one geodesic.

    A' and A'' come from quintic splines of the A entries, so the three
    identities BA = (BA)^T, A' = 2BA and A'' = 2 B^2 A - 2 R test the
    integrated fields against independent differentiation. Residuals
    are relative to the local matrix scales; the first node (A = 0) and
    a margin near a conjugate point (B blows up) are excluded.
    """
    t, A, B, R = td.t, td.A, td.B, td.Rmat
    keep = t.size
    tc = first_conjugate_point(td)
    if tc is not None and tc <= t[-1]:
        keep = max(int(np.searchsorted(t, 0.9 * tc)), 8)
    sl = slice(1, keep)
    m = td.m
    Ap = np.empty((keep - 1, m, m))
    App = np.empty((keep - 1, m, m))
    for i in range(m):
        for j in range(m):
            spl = InterpolatedUnivariateSpline(t[:keep], A[:keep, i, j], k=5)
            Ap[:, i, j] = spl.derivative(1)(t[sl])
            App[:, i, j] = spl.derivative(2)(t[sl])
    BA = np.einsum("kij,kjl->kil", B[sl], A[sl])
    B2A = np.einsum("kij,kjl->kil", B[sl], BA)
    sc1 = np.maximum(1.0, np.max(np.abs(BA), axis=(1, 2)))
    r_sym = np.max(np.abs(BA - BA.transpose(0, 2, 1)), axis=(1, 2)) / sc1
    r_ap = np.max(np.abs(Ap - 2.0 * BA), axis=(1, 2)) / sc1
    sc2 = np.maximum(1.0, np.max(np.abs(B2A), axis=(1, 2))
                     + np.max(np.abs(R[sl]), axis=(1, 2)))
    r_app = np.max(np.abs(App - 2.0 * B2A + 2.0 * R[sl]), axis=(1, 2)) / sc2
    return {"wronskian": float(np.max(r_sym)),
            "first_order": float(np.max(r_ap)),
            "second_order": float(np.max(r_app)),
            "gauss": float(td.diagnostics["gauss_residual"]),
            "nodes": int(keep - 1)}


class JacobiField:
    """One transverse Jacobi field J(t) with its covariant derivative DJ."""

    __slots__ = ("path", "t", "J", "DJ")

    def __init__(self, path, t, J, DJ):
        self.path = path
        self.t = t
        self.J = J
        self.DJ = DJ


def jacobi_field(td, coeffs):
    """Jacobi field with J(0) = 0 and DJ(0) = sum_i coeffs_i e_i(0)."""
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (td.m,):
        raise ValidationError("coefficients must have length %d" % td.m)
    J = np.einsum("i,tij,tja->ta", c, td.Y, td.frame)
    DJ = np.einsum("i,tij,tja->ta", c, td.Yp, td.frame)
    return JacobiField(td.path, td.t, J, DJ)
