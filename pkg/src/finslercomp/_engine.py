"""Jet engine: every tensor below is an exact nested-dual derivative of L.

Evaluators take the raw Lagrangian callable L(x, v) where x and v are
length-n lists whose entries are floats, equal-shaped numpy arrays (batched
evaluation), or Duals (when an outer evaluator is differentiating this one).
Results keep whatever scalar type flows through.

Conventions:
    g_ij        = d²L/dv^i dv^j
    C_ijk       = (1/2) d³L/dv^i dv^j dv^k
    gamma^i_jk  = (1/2) g^il (d_j g_lk + d_k g_jl − d_l g_jk)
    G^i         = (1/2) g^il (d²L/dx^k dv^l v^k − dL/dx^l)   (Euler–Lagrange form,
                  equal to (1/2) gamma^i_jk v^j v^k by 2-homogeneity)
    N^i_j       = dG^i/dv^j
    R^i_j       = 2 d_j G^i − v^k d_k N^i_j + 2 G^k dN^i_j/dv^k − N^i_k N^k_j
"""

from itertools import permutations

from ._dual import Dual, eps_part, fresh_level, real


def det(A):
    """Determinant by Laplace expansion; entries may be Duals or arrays."""
    n = len(A)
    if n == 1:
        return A[0][0]
    if n == 2:
        return A[0][0] * A[1][1] - A[0][1] * A[1][0]
    tot = None
    for j in range(n):
        minor = [[A[r][c] for c in range(n) if c != j] for r in range(1, n)]
        term = A[0][j] * det(minor)
        if j % 2:
            term = -term
        tot = term if tot is None else tot + term
    return tot


def solve(A, rhs):
    """Cramer solve of A x = rhs (small n; division-free except by det A)."""
    n = len(A)
    d = det(A)
    out = []
    for i in range(n):
        Ai = [[rhs[r] if c == i else A[r][c] for c in range(n)] for r in range(n)]
        out.append(det(Ai) / d)
    return out


def inverse(A):
    """Adjugate inverse; entries may be Duals or arrays."""
    n = len(A)
    d = det(A)
    if n == 1:
        return [[1.0 / d]]
    inv = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[A[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            cof = det(minor)
            if (i + j) % 2:
                cof = -cof
            inv[j][i] = cof / d
    return inv


def grad_v(L, n, x, v):
    out = []
    for i in range(n):
        lv = fresh_level()
        vi = list(v)
        vi[i] = Dual(lv, vi[i], 1.0)
        out.append(eps_part(L(x, vi), lv))
    return out


def grad_x(L, n, x, v):
    out = []
    for i in range(n):
        lv = fresh_level()
        xi = list(x)
        xi[i] = Dual(lv, xi[i], 1.0)
        out.append(eps_part(L(xi, v), lv))
    return out


def metric(L, n, x, v):
    """g[i][j] = d²L/dv^i dv^j (symmetric by construction)."""
    g = [[None] * n for _ in range(n)]
    for i in range(n):
        lvi = fresh_level()
        vi = list(v)
        vi[i] = Dual(lvi, vi[i], 1.0)
        for j in range(i, n):
            lvj = fresh_level()
            vij = list(vi)
            vij[j] = Dual(lvj, vij[j], 1.0)
            val = eps_part(eps_part(L(x, vij), lvj), lvi)
            g[i][j] = val
            g[j][i] = val
    return g


def cartan(L, n, x, v):
    """C[i][j][k] = (1/2) d³L/dv^i dv^j dv^k, totally symmetric."""
    C = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        lvi = fresh_level()
        vi = list(v)
        vi[i] = Dual(lvi, vi[i], 1.0)
        for j in range(i, n):
            lvj = fresh_level()
            vij = list(vi)
            vij[j] = Dual(lvj, vij[j], 1.0)
            for k in range(j, n):
                lvk = fresh_level()
                vijk = list(vij)
                vijk[k] = Dual(lvk, vijk[k], 1.0)
                val = 0.5 * eps_part(
                    eps_part(eps_part(L(x, vijk), lvk), lvj), lvi
                )
                for a, b, c in set(permutations((i, j, k))):
                    C[a][b][c] = val
    return C


def metric_dx(L, n, x, v):
    """dg[k][i][j] = dg_ij/dx^k."""
    out = []
    for k in range(n):
        lv = fresh_level()
        xk = list(x)
        xk[k] = Dual(lv, xk[k], 1.0)
        gk = metric(L, n, xk, v)
        out.append([[eps_part(gk[i][j], lv) for j in range(n)] for i in range(n)])
    return out


def spray(L, n, x, v):
    """G^i in Euler–Lagrange form; one x-directional pass along v."""
    g = metric(L, n, x, v)
    lv = fresh_level()
    # seed x along v; dual-valued v entries contract correctly by chain rule
    xs = [Dual(lv, x[k], v[k]) for k in range(n)]
    gv = grad_v(L, n, xs, v)
    dir_term = [eps_part(gv[l], lv) for l in range(n)]
    gx = grad_x(L, n, x, v)
    rhs = [dir_term[l] - gx[l] for l in range(n)]
    return [0.5 * s for s in solve(g, rhs)]


def nonlinear(L, n, x, v):
    """N[i][j] = dG^i/dv^j."""
    N = [[None] * n for _ in range(n)]
    for j in range(n):
        lv = fresh_level()
        vj = list(v)
        vj[j] = Dual(lv, vj[j], 1.0)
        Gj = spray(L, n, x, vj)
        for i in range(n):
            N[i][j] = eps_part(Gj[i], lv)
    return N


def curvature(L, n, x, v):
    """R[i][j], differentiating the spray/nonlinear evaluators directly."""
    G = spray(L, n, x, v)
    N = nonlinear(L, n, x, v)
    dxG = [[None] * n for _ in range(n)]
    for j in range(n):
        lv = fresh_level()
        xj = list(x)
        xj[j] = Dual(lv, xj[j], 1.0)
        Gx = spray(L, n, xj, v)
        for i in range(n):
            dxG[i][j] = eps_part(Gx[i], lv)
    lv = fresh_level()
    xs = [Dual(lv, x[k], v[k]) for k in range(n)]
    Nx = nonlinear(L, n, xs, v)
    NxDir = [[eps_part(Nx[i][j], lv) for j in range(n)] for i in range(n)]
    lv = fresh_level()
    vs = [Dual(lv, v[k], G[k]) for k in range(n)]
    Nv = nonlinear(L, n, x, vs)
    NvDir = [[eps_part(Nv[i][j], lv) for j in range(n)] for i in range(n)]
    R = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = 2.0 * dxG[i][j] - NxDir[i][j] + 2.0 * NvDir[i][j]
            for k in range(n):
                acc = acc - N[i][k] * N[k][j]
            R[i][j] = acc
    return R


def ricci(L, n, x, v):
    R = curvature(L, n, x, v)
    acc = R[0][0]
    for i in range(1, n):
        acc = acc + R[i][i]
    return acc


def gamma(L, n, x, v, g=None, dg=None, ginv=None):
    """Formal Christoffel gamma^i_jk."""
    if g is None:
        g = metric(L, n, x, v)
    if dg is None:
        dg = metric_dx(L, n, x, v)
    if ginv is None:
        ginv = inverse(g)
    gam = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                acc = None
                for l in range(n):
                    term = dg[j][l][k] + dg[k][j][l] - dg[l][j][k]
                    t = ginv[i][l] * term
                    acc = t if acc is None else acc + t
                val = 0.5 * acc
                gam[i][j][k] = val
                gam[i][k][j] = val
    return gam


def chern(L, n, x, v):
    """Chern connection Gamma^i_jk = gamma^i_jk − g^il (C_lkm N^m_j + C_jlm N^m_k − C_jkm N^m_l)."""
    g = metric(L, n, x, v)
    ginv = inverse(g)
    gam = gamma(L, n, x, v, g=g, ginv=ginv)
    C = cartan(L, n, x, v)
    N = nonlinear(L, n, x, v)
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                corr = None
                for l in range(n):
                    s = None
                    for m in range(n):
                        t = (
                            C[l][k][m] * N[m][j]
                            + C[j][l][m] * N[m][k]
                            - C[j][k][m] * N[m][l]
                        )
                        s = t if s is None else s + t
                    t2 = ginv[i][l] * s
                    corr = t2 if corr is None else corr + t2
                out[i][j][k] = gam[i][j][k] - corr
    return out


def chern_hv(L, n, x, v):
    """Transport matrix W^i_k = Gamma^i_jk(v) v^j = gamma^i_jk v^j − 2 g^il C_lkm G^m.

    The Cartan corrections with v in a lower slot vanish by the Euler
    contraction identities, which is what collapses the Chern formula here.
    """
    g = metric(L, n, x, v)
    ginv = inverse(g)
    gam = gamma(L, n, x, v, g=g, ginv=ginv)
    C = cartan(L, n, x, v)
    G = spray(L, n, x, v)
    W = [[None] * n for _ in range(n)]
    for i in range(n):
        for k in range(n):
            acc = None
            for j in range(n):
                t = gam[i][j][k] * v[j]
                acc = t if acc is None else acc + t
            for l in range(n):
                s = None
                for m in range(n):
                    t = C[l][k][m] * G[m]
                    s = t if s is None else s + t
                acc = acc - 2.0 * (ginv[i][l] * s)
            W[i][k] = acc
    return W


def flow_jet2(L, n, x, v):
    """(acc, jerk) of the geodesic through (x, v): acc = −2G, jerk = −2 d_xG·v + 4 N·G."""
    G = spray(L, n, x, v)
    lv = fresh_level()
    xs = [Dual(lv, x[k], v[k]) for k in range(n)]
    Gx = spray(L, n, xs, v)
    dxGv = [eps_part(Gx[i], lv) for i in range(n)]
    N = nonlinear(L, n, x, v)
    acc = [-2.0 * G[i] for i in range(n)]
    jerk = []
    for i in range(n):
        ng = None
        for k in range(n):
            t = N[i][k] * G[k]
            ng = t if ng is None else ng + t
        jerk.append(-2.0 * dxGv[i] + 4.0 * ng)
    return acc, jerk


def weight_jet2(L, n, weight, x, v):
    """psi, psi', psi'' at t=0 along the geodesic flow from (x, v).

    Uses the hyper-dual s = eps1 + eps2 trick on the second-order Taylor
    expansion of the flow, so psi'' is exact for the given acc/jerk.
    """
    acc, jerk = flow_jet2(L, n, x, v)
    lv1 = fresh_level()
    lv2 = fresh_level()
    s = Dual(lv2, Dual(lv1, 0.0, 1.0), 1.0)
    s2h = 0.5 * (s * s)
    xs = [x[k] + s * v[k] + s2h * acc[k] for k in range(n)]
    vs = [v[k] + s * acc[k] + s2h * jerk[k] for k in range(n)]
    val = weight(xs, vs)
    return (
        real(val),
        real(eps_part(val, lv1)),
        real(eps_part(eps_part(val, lv2), lv1)),
    )
