"""Weights, the two-parameter (N, eps) bookkeeping, and weighted Ricci.

Conventions, uniform over both signatures with m := dim - 1:
  N_low = 1 (positive) or 0 (lorentzian),  n_ref = N_low + m.
  Admissible N: (-inf, N_low] union [n_ref, +inf].
  eps-range: eps = 0 at N = N_low; any eps at N = n_ref; |eps| <
  sqrt((N - N_low)/(N - n_ref)) otherwise, with threshold 1 at N = inf.
  c(N, eps) = (1/m) (1 - eps^2 (N - n_ref)/(N - N_low)) > 0.
  Ric_N(v) = Ric(v) + psi'' - psi'^2/(N - n_ref), the last term dropped
  at N = +-inf and at N = n_ref when psi' = 0.
  phi(t) = integral of exp(2(eps-1) psi / m); weights psi are functions
  of the velocity, psi(eta'(t)), built from a measure density rho via
  psi = log(sqrt(|det g|) / rho).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import InterpolatedUnivariateSpline, PchipInterpolator

from . import _dual as d
from . import _engine as eng
from .core import check_admissible
from .curvature import grid_metric, grid_ricci
from .errors import NumericalError, ValidationError
from .report import CheckReport, write_csv


def _regime(signature):
    if signature == "positive":
        return 1.0
    if signature == "lorentzian":
        return 0.0
    raise ValidationError("unknown signature %r" % (signature,))


def eps_threshold(dim, signature, N):
    """Supremum of admissible |eps| for this N (inf at N = n_ref)."""
    m = int(dim) - 1
    if m < 1:
        raise ValidationError("need dim >= 2 for comparison parameters")
    N_low = _regime(signature)
    n_ref = N_low + m
    N = float(N)
    if N_low < N < n_ref:
        raise ValidationError(
            "N = %g lies in the forbidden interval (%g, %g); admissible: "
            "(-inf, %g] or [%g, +inf]" % (N, N_low, n_ref, N_low, n_ref))
    if N == N_low:
        return 0.0
    if N == n_ref:
        return math.inf
    if math.isinf(N):
        return 1.0
    return math.sqrt((N - N_low) / (N - n_ref))


def epsilon_range_constant(dim, signature, N, eps):
    """The constant c(N, eps) > 0 of the eps-range."""
    m = int(dim) - 1
    N_low = _regime(signature)
    n_ref = N_low + m
    N = float(N)
    eps = float(eps)
    thr = eps_threshold(dim, signature, N)
    if N == N_low:
        if eps != 0.0:
            raise ValidationError(
                "eps must be 0 at N = %g, got %g" % (N_low, eps))
        return 1.0 / m
    if N == n_ref:
        return 1.0 / m
    if not abs(eps) < thr:
        raise ValidationError(
            "eps = %g out of range for N = %s; admissible interval: "
            "(-%g, %g)" % (eps, N, thr, thr))
    if math.isinf(N):
        c = (1.0 - eps * eps) / m
    else:
        c = (1.0 - eps * eps * (N - n_ref) / (N - N_low)) / m
    if not c > 0.0:
        raise ValidationError("constant c(N, eps) = %g is not positive" % c)
    return c


@dataclass(frozen=True)
class ComparisonParams:
    """Hypothesis package for one comparison check."""

    N: float
    eps: float
    K: float
    a: float
    b: float
    c: float
    m: int


def comparison_params(space, N, eps, K, a=1.0, b=1.0):
    a = float(a)
    b = float(b)
    if not (a > 0.0 and b >= a):
        raise ValidationError("bounds must satisfy 0 < a <= b, got a=%g b=%g"
                              % (a, b))
    c = epsilon_range_constant(space.dim, space.signature, N, eps)
    return ComparisonParams(float(N), float(eps), float(K), a, b, c,
                            space.dim - 1)


def density_weight_function(space, density):
    """psi(x, v) = log(sqrt(|det g_v|) / rho(x)) as a dual-safe callable."""
    n = space.dim

    def psi(x, v):
        g = eng.metric(space.lagrangian, n, x, v)
        dg = eng.det(g)
        if space.signature == "lorentzian":
            dg = -dg
        return 0.5 * d.log(dg) - d.log(density(x))

    return psi


class WeightAlongGeodesic:
    """Weight profile psi(eta'(t)) with derivatives and the phi reparam.

    psi/dpsi/ddpsi live on the uniform grid t; callables psi_of, dpsi_of,
    ddpsi_of evaluate the underlying quintic spline anywhere on the span.
    phi corresponds to the stored eps (phi = t when eps = 1).
    """

    __slots__ = ("path", "t", "psi", "dpsi", "ddpsi", "phi", "phi_inv",
                 "eps", "m", "_spl")

    def __init__(self, path, t, psi, dpsi, ddpsi, phi, phi_inv, eps, m, spl):
        self.path = path
        self.t = t
        self.psi = psi
        self.dpsi = dpsi
        self.ddpsi = ddpsi
        self.phi = phi
        self.phi_inv = phi_inv
        self.eps = eps
        self.m = m
        self._spl = spl

    def psi_of(self, t):
        return self._spl(t)

    def dpsi_of(self, t):
        return self._spl.derivative(1)(t)

    def ddpsi_of(self, t):
        return self._spl.derivative(2)(t)

    def with_phi(self, phi, phi_inv, eps):
        return WeightAlongGeodesic(self.path, self.t, self.psi, self.dpsi,
                                   self.ddpsi, phi, phi_inv, eps, self.m,
                                   self._spl)

    def write_csv(self, fname):
        write_csv(fname, ["t", "psi", "dpsi", "ddpsi", "phi"],
                  [self.t, self.psi, self.dpsi, self.ddpsi, self.phi])


def weight_from_density(space, density, path, n_steps=400):
    """Sample psi along a geodesic and differentiate its quintic spline.

    The spline derivatives are cross-checked against direct forward-mode
    differentiation of psi through the geodesic flow at a handful of
    nodes; disagreement beyond 1e-5 aborts (it means under-resolution).
    """
    if density is None:
        density = space.natural_density
    if density is None:
        raise ValidationError(
            "space %s declares no natural density; supply one explicitly"
            % space.name)
    n = space.dim
    m = n - 1
    n_steps = int(n_steps)
    t_end = float(path.t_grid[-1])
    t = np.linspace(0.0, t_end, n_steps + 1)
    xg, vg = path.interp(t)
    X = np.asarray(xg).T.copy()
    V = np.asarray(vg).T.copy()

    g = grid_metric(space.lagrangian, n, X, V)
    detg = np.linalg.det(g)
    if space.signature == "lorentzian":
        detg = -detg
    if np.any(detg <= 0.0):
        raise NumericalError("fundamental tensor determinant lost its sign")
    xb = [X[:, i] for i in range(n)]
    rho = np.broadcast_to(np.asarray(d.real(density(xb)), dtype=float),
                          (len(t),))
    if np.any(rho <= 0.0):
        raise ValidationError("density must be positive along the path")
    psi = 0.5 * np.log(detg) - np.log(rho)

    spl = InterpolatedUnivariateSpline(t, psi, k=5)
    dpsi = spl.derivative(1)(t)
    ddpsi = spl.derivative(2)(t)

    # spline vs exact forward-mode jets at a few interior nodes
    wfun = density_weight_function(space, density)
    idx = np.linspace(0, n_steps, 5).astype(int)[1:-1]
    worst = 0.0
    for k in idx:
        _, d1, d2 = eng.weight_jet2(space.lagrangian, n, wfun,
                                    list(X[k]), list(V[k]))
        scale = max(1.0, abs(float(d.real(d2))))
        worst = max(worst,
                    abs(float(d.real(d1)) - dpsi[k]) / scale,
                    abs(float(d.real(d2)) - ddpsi[k]) / scale)
    if worst > 1e-5:
        raise NumericalError(
            "spline weight derivatives disagree with exact jets by %g; "
            "the profile is under-resolved" % worst)

    phi = t.copy()
    phi_inv = PchipInterpolator(phi, t)
    return WeightAlongGeodesic(path, t, psi, dpsi, ddpsi, phi, phi_inv,
                               1.0, m, spl)


def reparametrize(path, weight, eps):
    """phi grid, monotone inverse, and the completeness integral phi(T).

    phi(t) = integral_0^t exp(2(eps-1) psi/m); for eps = 1 (or psi
    identically zero) phi is the time grid itself.
    """
    eps = float(eps)
    t = weight.t
    if eps == 1.0 or not np.any(weight.psi):
        phi = t.copy()
    else:
        integrand = np.exp((2.0 * (eps - 1.0) / weight.m) * weight.psi)
        spl = InterpolatedUnivariateSpline(t, integrand, k=5)
        phi = spl.antiderivative()(t)
        phi[0] = 0.0
    dphi = np.diff(phi)
    if np.any(dphi <= 0.0):
        raise NumericalError("phi reparametrization is not increasing")
    phi_inv = PchipInterpolator(phi, t)
    return phi, phi_inv, float(phi[-1])


def _weight_jets_at(space, density, x, v):
    wfun = density_weight_function(space, density)
    psi, d1, d2 = eng.weight_jet2(space.lagrangian, space.dim, wfun, x, v)
    return (float(d.real(psi)), float(d.real(d1)), float(d.real(d2)))


def weighted_ricci(space, x, v, N, density=None):
    """Ric_N(v) = Ric(v) + psi'' - psi'^2/(N - n_ref) at one flagpole.

    N = n_ref with psi' != 0 returns -inf (the defined limit), never
    raises. N = +-inf drops the last term identically.
    """
    xl, vl = check_admissible(space, x, v)
    if density is None:
        density = space.natural_density
    if density is None:
        raise ValidationError(
            "space %s declares no natural density; supply one explicitly"
            % space.name)
    N = float(N)
    N_low = _regime(space.signature)
    m = space.dim - 1
    n_ref = N_low + m
    if N_low < N < n_ref:
        raise ValidationError(
            "N = %g lies in the forbidden interval (%g, %g)" % (N, N_low, n_ref))
    ric = float(d.real(eng.ricci(space.lagrangian, space.dim, xl, vl)))
    _, d1, d2 = _weight_jets_at(space, density, xl, vl)
    if math.isinf(N):
        return ric + d2
    if N == n_ref:
        if abs(d1) <= 1e-12:
            return ric + d2
        return -math.inf
    return ric + d2 - d1 * d1 / (N - n_ref)


def monotonicity_check(space, samples=40, N_list=None, rng_seed=0,
                       density=None):
    """Check Ric_n <= Ric_N <= Ric_inf <= Ric_N' <= Ric_N_low samplewise.

    N values from N_list are ordered into the theoretical chain (upper
    regime ascending, then infinity, then lower regime ascending) and
    consecutive differences must be nonnegative up to roundoff.
    """
    from .core import sample_admissible
    N_low = _regime(space.signature)
    n_ref = N_low + (space.dim - 1)
    if N_list is None:
        N_list = [n_ref, n_ref + 2.0, math.inf, -2.0, N_low]
    upper = sorted(N for N in N_list if not math.isinf(N) and N >= n_ref)
    lower = sorted(N for N in N_list if not math.isinf(N) and N <= N_low)
    chain = upper + [math.inf] + lower

    rng = np.random.default_rng(rng_seed)
    X, V = sample_admissible(space, rng, samples)
    residuals = []
    for s in range(samples):
        vals = [weighted_ricci(space, X[s], V[s], N, density=density)
                for N in chain]
        scale = max(1.0, max(abs(u) for u in vals if not math.isinf(u)))
        worst = 0.0
        for kk in range(len(vals) - 1):
            worst = max(worst, (vals[kk] - vals[kk + 1]) / scale)
        residuals.append(worst)
    tol = 1e-9
    return CheckReport.build(
        name="monotonicity",
        scenario=space.name,
        params={"N": None, "eps": 0.0, "K": 0.0,
                "a": 1.0, "b": 1.0, "c": 1.0 / (space.dim - 1)},
        grid=list(range(samples)),
        residuals=[float(r) for r in residuals],
        max_violation=float(max(residuals)),
        tolerance=tol,
        diagnostics={"chain": [repr(float(N)) for N in chain]},
    )
