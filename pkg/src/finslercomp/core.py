"""Charted spaces, fundamental/Cartan tensors, and the public derivative op.

A ChartedSpace stores the Lagrangian L with L = F^2/2 in the positive case
and the defining 2-homogeneous Lagrangian (negative on timelike vectors) in
the lorentzian case. All geometry downstream is derived from L by exact
nested-dual differentiation (see _engine).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _engine as eng
from ._dual import real
from .errors import AdmissibilityError, NumericalError, ValidationError
from .report import CheckReport

SIGNATURES = ("positive", "lorentzian")


@dataclass(frozen=True)
class Pt:
    coords: np.ndarray

    def __init__(self, coords):
        object.__setattr__(self, "coords", np.asarray(coords, dtype=float))


@dataclass(frozen=True)
class Vec:
    coords: np.ndarray
    base: Pt

    def __init__(self, coords, base):
        object.__setattr__(self, "coords", np.asarray(coords, dtype=float))
        object.__setattr__(self, "base", base if isinstance(base, Pt) else Pt(base))


@dataclass(frozen=True)
class Covec:
    coords: np.ndarray
    base: Pt

    def __init__(self, coords, base):
        object.__setattr__(self, "coords", np.asarray(coords, dtype=float))
        object.__setattr__(self, "base", base if isinstance(base, Pt) else Pt(base))


class ChartedSpace:
    """One coordinate chart of a (weighted) Finsler manifold or spacetime.

    Immutable after construction and safe to share across threads; every
    operation in the package is a pure function of (space, inputs).
    """

    __slots__ = ("dim", "signature", "lagrangian", "chart_domain", "weight",
                 "name", "orientation", "chart_margin", "natural_density",
                 "sample_box", "cone_margin", "params")

    def __init__(self, dim, signature, lagrangian, chart_domain=None,
                 weight=None, name="custom", orientation=None,
                 chart_margin=None, natural_density=None, sample_box=None,
                 cone_margin=1e-6, params=None):
        dim = int(dim)
        if dim < 1 or (signature == "lorentzian" and dim < 2):
            raise ValidationError("dimension %d too small for signature %s"
                                  % (dim, signature))
        if signature not in SIGNATURES:
            raise ValidationError("signature must be one of %s" % (SIGNATURES,))
        self.dim = dim
        self.signature = signature
        self.lagrangian = lagrangian
        self.chart_domain = chart_domain or (lambda x: True)
        self.weight = weight
        self.name = name
        if orientation is None and signature == "lorentzian":
            axis = [1.0] + [0.0] * (dim - 1)
            orientation = lambda x: list(axis)
        self.orientation = orientation
        self.chart_margin = chart_margin
        self.natural_density = natural_density
        if sample_box is None:
            sample_box = [(-0.8, 0.8)] * dim
        self.sample_box = sample_box
        self.cone_margin = float(cone_margin)
        self.params = dict(params or {})

    def __repr__(self):
        return "ChartedSpace(%s, dim=%d, %s)" % (self.name, self.dim, self.signature)


def as_coord_list(obj):
    """Coerce Pt/Vec/Covec or any sequence to a plain list of floats."""
    if isinstance(obj, (Pt, Vec, Covec)):
        arr = obj.coords
    else:
        arr = np.asarray(obj, dtype=float)
    return [float(c) for c in arr]


def check_point(space, x):
    xl = as_coord_list(x)
    if len(xl) != space.dim:
        raise ValidationError("point has length %d, expected %d" % (len(xl), space.dim))
    if not space.chart_domain(xl):
        raise AdmissibilityError("point %s outside chart domain" % (xl,))
    return xl


def check_admissible(space, x, v, margin=None):
    """Validate (x, v) for tensor evaluation; returns coordinate lists."""
    xl = check_point(space, x)
    vl = as_coord_list(v)
    if len(vl) != space.dim:
        raise ValidationError("vector has length %d, expected %d" % (len(vl), space.dim))
    vv = np.asarray(vl)
    n2 = float(vv @ vv)
    if n2 == 0.0:
        raise AdmissibilityError("v = 0 is rejected for tensor operations")
    if space.signature == "lorentzian":
        m = space.cone_margin if margin is None else margin
        lval = float(real(space.lagrangian(xl, vl)))
        if lval > -m * n2:
            raise AdmissibilityError(
                "vector not timelike with margin: L=%g, need <= %g" % (lval, -m * n2))
    return xl, vl


def lagrangian_value(space, x, v):
    xl = as_coord_list(x)
    vl = as_coord_list(v)
    return float(real(space.lagrangian(xl, vl)))


@dataclass(frozen=True)
class MetricAtVector:
    """Fundamental tensor g_ij(v) with its base (Pt, Vec)."""

    matrix: np.ndarray
    base: tuple

    def __init__(self, matrix, base):
        object.__setattr__(self, "matrix", np.asarray(matrix, dtype=float))
        object.__setattr__(self, "base", base)


def _signature_check(space, mat, where=""):
    evals = np.linalg.eigvalsh(mat)
    scale = float(np.max(np.abs(evals)))
    if scale == 0.0:
        raise NumericalError("degenerate fundamental tensor (zero matrix)%s" % where)
    if scale / max(float(np.min(np.abs(evals))), 1e-300) > 1e13:
        raise NumericalError("degenerate fundamental tensor (condition > 1e13)%s" % where)
    neg = int(np.sum(evals < 0))
    want = 1 if space.signature == "lorentzian" else 0
    if neg != want:
        raise NumericalError(
            "fundamental tensor has %d negative eigenvalues, expected %d%s"
            % (neg, want, where))


def fundamental_tensor(space, x, v):
    """g_ij(v) as a MetricAtVector; checks symmetry and declared signature."""
    xl, vl = check_admissible(space, x, v)
    g = eng.metric(space.lagrangian, space.dim, xl, vl)
    mat = np.array([[float(real(g[i][j])) for j in range(space.dim)]
                    for i in range(space.dim)])
    _signature_check(space, mat)
    return MetricAtVector(mat, (Pt(xl), Vec(vl, Pt(xl))))


def cartan_tensor(space, x, v):
    """C_ijk(v) as an (n, n, n) array, totally symmetric."""
    xl, vl = check_admissible(space, x, v)
    n = space.dim
    C = eng.cartan(space.lagrangian, n, xl, vl)
    return np.array([[[float(real(C[i][j][k])) for k in range(n)]
                      for j in range(n)] for i in range(n)])


def inner_product(g, w1, w2):
    """g_v(w1, w2) for a MetricAtVector and two vectors at its base point."""
    for w in (w1, w2):
        if isinstance(w, Vec) and not np.array_equal(w.base.coords, g.base[0].coords):
            raise ValidationError("vector based at %s, metric at %s"
                                  % (w.base.coords, g.base[0].coords))
    a = np.asarray(as_coord_list(w1))
    b = np.asarray(as_coord_list(w2))
    return float(a @ g.matrix @ b)


def finsler_norm(space, x, v):
    """F(v) = sqrt(2L) (positive) or sqrt(-2L) (lorentzian, timelike only)."""
    xl, vl = check_admissible(space, x, v)
    lval = float(real(space.lagrangian(xl, vl)))
    if space.signature == "positive":
        if lval <= 0.0:
            raise AdmissibilityError("L(v) = %g <= 0 on a positive-definite space" % lval)
        return math.sqrt(2.0 * lval)
    if lval >= 0.0:
        raise AdmissibilityError("L(v) = %g >= 0: not timelike" % lval)
    return math.sqrt(-2.0 * lval)


def _parse_multi_index(dim, multi_index):
    """Accept [('x', i), ('v', j), ...] or a pair (alpha, beta) of per-coordinate orders."""
    axes = []
    mi = list(multi_index)
    if len(mi) == 2 and all(
            isinstance(part, (tuple, list)) and len(part) == dim and
            all(isinstance(o, (int, np.integer)) for o in part) for part in mi):
        alpha, beta = mi
        for i, o in enumerate(alpha):
            axes.extend([("x", i)] * int(o))
        for i, o in enumerate(beta):
            axes.extend([("v", i)] * int(o))
        return axes
    for item in mi:
        slot, idx = item
        if slot not in ("x", "v"):
            raise ValidationError("multi-index slot must be 'x' or 'v', got %r" % (slot,))
        idx = int(idx)
        if not 0 <= idx < dim:
            raise ValidationError("multi-index coordinate %d out of range" % idx)
        axes.append((slot, idx))
    return axes


def derive(space, field, x, v, multi_index, tol=None):
    """Mixed partial of a scalar field on TM with a step-halving error estimate.

    Richardson-extrapolated central differences with order-adaptive steps.
    Returns (value, error_estimate); raises if total order exceeds 4, if a
    stencil point leaves the chart, or if the estimate exceeds tol.
    """
    xl = check_point(space, x)
    vl = as_coord_list(v)
    axes = _parse_multi_index(space.dim, multi_index)
    order = len(axes)
    if order == 0:
        return float(real(field(xl, vl))), 0.0
    if order > 4:
        raise ValidationError("order-too-high: total derivative order %d > 4" % order)
    eps = float(np.finfo(float).eps)
    hs = []
    for slot, idx in axes:
        base = xl[idx] if slot == "x" else vl[idx]
        hs.append(eps ** (1.0 / (order + 2)) * max(1.0, abs(base)))
    fmax = [0.0]

    def evaluate(xc, vc):
        if not space.chart_domain(xc):
            raise AdmissibilityError("derivative stencil left the chart domain")
        val = float(real(field(xc, vc)))
        fmax[0] = max(fmax[0], abs(val))
        return val

    def central(xc, vc, k, scale):
        if k == order:
            return evaluate(xc, vc)
        slot, idx = axes[k]
        h = hs[k] * scale
        if slot == "x":
            xp = list(xc); xp[idx] += h
            xm = list(xc); xm[idx] -= h
            return (central(xp, vc, k + 1, scale) - central(xm, vc, k + 1, scale)) / (2 * h)
        vp = list(vc); vp[idx] += h
        vm = list(vc); vm[idx] -= h
        return (central(xc, vp, k + 1, scale) - central(xc, vm, k + 1, scale)) / (2 * h)

    coarse = central(xl, vl, 0, 1.0)
    fine = central(xl, vl, 0, 0.5)
    value = (4.0 * fine - coarse) / 3.0
    hprod = 1.0
    for h in hs:
        hprod *= 0.5 * h
    roundoff = 4.0 * eps * max(1.0, fmax[0]) * (2.0 ** order) / hprod
    estimate = abs(fine - coarse) / 3.0 + roundoff
    if tol is not None and estimate > tol:
        raise NumericalError(
            "derivative error estimate %g exceeds requested tolerance %g"
            % (estimate, tol))
    return value, estimate


def sample_admissible(space, rng, count, box=None, vscale=1.0):
    """Random admissible (x, v) samples as (count, dim) arrays."""
    n = space.dim
    box = box or space.sample_box
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    X = np.empty((count, n))
    V = np.empty((count, n))
    filled = 0
    tries = 0
    while filled < count:
        tries += 1
        if tries > 200:
            raise NumericalError("admissible sampling failed to converge")
        m = count - filled
        xs = lo + (hi - lo) * rng.uniform(size=(m, n))
        if space.signature == "positive":
            vs = rng.uniform(-1.0, 1.0, size=(m, n)) * vscale
            ok = np.einsum("ij,ij->i", vs, vs) > 1e-2
        else:
            axes = np.array([space.orientation(list(row)) for row in xs])
            tilt = rng.uniform(-1.0, 1.0, size=(m, n))
            tilt /= np.maximum(np.linalg.norm(tilt, axis=1, keepdims=True), 1e-12)
            r = rng.uniform(0.0, 0.55, size=(m, 1))
            vs = (axes + r * tilt) * vscale
            xlist = [xs[:, i] for i in range(n)]
            vlist = [vs[:, i] for i in range(n)]
            lval = real(space.lagrangian(xlist, vlist))
            lval = np.broadcast_to(np.asarray(lval, dtype=float), (m,))
            n2 = np.einsum("ij,ij->i", vs, vs)
            ok = lval <= -space.cone_margin * n2
        ok = ok & np.array([bool(space.chart_domain(list(row))) for row in xs])
        k = int(np.sum(ok))
        if k:
            X[filled:filled + k] = xs[ok]
            V[filled:filled + k] = vs[ok]
            filled += k
    return X, V


def validate_homogeneity(space, sample_count=200, rng_seed=0):
    """Sampled structure report: 2-homogeneity of L, 0-homogeneity of g,
    Euler/Cartan contractions, and the declared vertical-Hessian signature."""
    rng = np.random.default_rng(rng_seed)
    X, V = sample_admissible(space, rng, sample_count)
    n = space.dim
    S = sample_count
    c = rng.uniform(0.5, 2.0, size=S)
    xb = [X[:, i] for i in range(n)]
    vb = [V[:, i] for i in range(n)]
    vc = [c * V[:, i] for i in range(n)]

    lv = np.broadcast_to(np.asarray(real(space.lagrangian(xb, vb)), float), (S,))
    lvc = np.broadcast_to(np.asarray(real(space.lagrangian(xb, vc)), float), (S,))
    scale_l = np.maximum(1.0, np.abs(lv))
    res_l = np.abs(lvc - c * c * lv) / scale_l

    g = eng.metric(space.lagrangian, n, xb, vb)
    gc = eng.metric(space.lagrangian, n, xb, vc)
    gmat = np.empty((S, n, n))
    res_g = np.zeros(S)
    for i in range(n):
        for j in range(n):
            gij = np.broadcast_to(np.asarray(real(g[i][j]), float), (S,))
            gcij = np.broadcast_to(np.asarray(real(gc[i][j]), float), (S,))
            gmat[:, i, j] = gij
            res_g = np.maximum(res_g, np.abs(gcij - gij))
    gscale = np.maximum(1.0, np.max(np.abs(gmat), axis=(1, 2)))
    res_g = res_g / gscale

    C = eng.cartan(space.lagrangian, n, xb, vb)
    res_c = np.zeros(S)
    for i in range(n):
        for j in range(n):
            acc = np.zeros(S)
            for k in range(n):
                acc = acc + np.broadcast_to(np.asarray(real(C[i][j][k]), float), (S,)) * V[:, k]
            res_c = np.maximum(res_c, np.abs(acc))
    res_c = res_c / gscale

    # Euler identity g_v(v, v) = 2 L(v)
    quad = np.einsum("si,sij,sj->s", V, gmat, V)
    res_e = np.abs(quad - 2.0 * lv) / scale_l

    evals = np.linalg.eigvalsh(gmat)
    neg = np.sum(evals < 0.0, axis=1)
    want = 1 if space.signature == "lorentzian" else 0
    res_sig = np.where(neg == want, 0.0, 1.0)

    residuals = np.maximum.reduce([res_l, res_g, res_c, res_e, res_sig])
    tol = 1e-8
    return CheckReport.build(
        name="validate_homogeneity",
        scenario=space.name,
        params={},
        grid=list(range(S)),
        residuals=[float(r) for r in residuals],
        max_violation=float(np.max(residuals)),
        tolerance=tol,
        diagnostics={
            "max_lagrangian_scaling": float(np.max(res_l)),
            "max_metric_zero_homogeneity": float(np.max(res_g)),
            "max_cartan_contraction": float(np.max(res_c)),
            "max_euler_identity": float(np.max(res_e)),
            "signature_failures": int(np.sum(res_sig > 0)),
        },
    )
