"""Lorentz-signature machinery on timelike cones.

Causal classification, the Legendre transform with its damped-Newton
inverse, Lagrange tensor fields with weighted expansion/shear, and the
timelike comparison checks: Raychaudhuri, conjugate-point bounds, the
radial d'Alembertian, cone-sector volume ratios, and Hessian symmetry.
All checks run along explicitly shot radial timelike geodesics; there is
no global time-separation solver.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import InterpolatedUnivariateSpline

from . import _dual as d
from . import _engine as eng
from .comparison import (DEFAULT_TOL, TAU_MIN_FRAC, _bundle_det_jacobi,
                         _chunked_matrix, _params_dict, _ricci_n_grid,
                         bishop_profile, check_bishop,
                         check_laplacian_comparison, comparison_s,
                         radial_laplacian)
from .connection import (connection_at, eng_l_batch, integrate_bundle,
                         integrate_geodesic)
from .core import (Covec, Pt, Vec, as_coord_list, check_admissible,
                   check_point, finsler_norm, lagrangian_value)
from .curvature import first_conjugate_point, grid_metric, transverse_data
from .errors import AdmissibilityError, NumericalError, ValidationError
from .report import CheckReport, write_csv
from .weighted import comparison_params, reparametrize, weight_from_density

LIGHT_BAND = 1e-9


def _require_lorentzian(space, what):
    if space.signature != "lorentzian":
        raise ValidationError("%s needs a lorentzian space, got %s"
                              % (what, space.signature))


def _legendre_coords(space, x, v):
    """dL/dv as a plain array; valid for any v where L is smooth."""
    grad = eng.grad_v(space.lagrangian, space.dim, x, v)
    return np.array([float(d.real(u)) for u in grad])


def _axis_at(space, x, orientation=None):
    if orientation is None:
        orientation = space.orientation
    axis = orientation(x) if callable(orientation) else orientation
    axis = np.asarray(as_coord_list(axis), dtype=float)
    if axis.shape != (space.dim,) or not np.all(np.isfinite(axis)):
        raise ValidationError("orientation axis must be a finite vector of "
                              "length %d" % space.dim)
    return axis / np.linalg.norm(axis)


@dataclass(frozen=True)
class CausalClass:
    """Causal type of a tangent vector plus its cone component.

    kind is one of "timelike", "lightlike", "spacelike", "zero"; future
    is True/False for causal vectors and None otherwise.
    """

    kind: str
    future: object

    def __str__(self):
        if self.future is None:
            return self.kind
        return "%s %s" % (self.kind, "future" if self.future else "past")


def classify(space, x, v, orientation=None):
    """Causal class of v at x, with |L(v)| <= 1e-9 |v|^2 as the light band.

    The future side is the cone component of the orientation axis X,
    decided by the sign of g_X(X, v) (the zoo charts all carry convex
    single future cones, so the sign test is exact there).
    """
    _require_lorentzian(space, "causal classification")
    xl = check_point(space, x)
    vl = as_coord_list(v)
    if len(vl) != space.dim:
        raise ValidationError("vector has length %d, expected %d"
                              % (len(vl), space.dim))
    va = np.asarray(vl)
    n2 = float(va @ va)
    if n2 == 0.0:
        return CausalClass("zero", None)
    lval = lagrangian_value(space, xl, vl)
    if abs(lval) <= LIGHT_BAND * n2:
        kind = "lightlike"
    elif lval < 0.0:
        kind = "timelike"
    else:
        return CausalClass("spacelike", None)
    axis = _axis_at(space, xl, orientation)
    # g_X(X, .) = dL/dv at X by 2-homogeneity
    ell = _legendre_coords(space, xl, list(axis))
    return CausalClass(kind, bool(float(ell @ va) < 0.0))


def legendre(space, x, v):
    """The Legendre covector of v: components dL/dv^alpha at (x, v)."""
    _require_lorentzian(space, "the Legendre transform")
    xl = check_point(space, x)
    vl = as_coord_list(v)
    if len(vl) != space.dim:
        raise ValidationError("vector has length %d, expected %d"
                              % (len(vl), space.dim))
    if not any(c != 0.0 for c in vl):
        raise AdmissibilityError("the Legendre transform is undefined at v = 0")
    return Covec(_legendre_coords(space, xl, vl), Pt(xl))


def _same_cone_component(space, xl, axis, U, step_rad=0.03):
    """Rows of U whose great-circle arc to the axis stays timelike.

    Isolates the axis's cone component: reaching another component
    forces the arc through non-timelike territory (the components of
    every catalogued cone are spherically convex, so no same-component
    direction is lost). The arc is walked by spherical interpolation at
    angle-proportional steps so narrow gaps cannot be hopped over.
    """
    dots = np.clip(U @ axis, -1.0, 1.0)
    ang = np.arccos(dots)
    # a spherically convex cone never spans a half great circle
    ok = ang < math.pi - 0.05
    if not np.any(ok):
        return ok
    steps = max(4, int(math.ceil(float(np.max(ang[ok])) / step_rad)))
    idx = np.where(ok)[0]
    Uk = U[idx]
    angk = ang[idx][:, None]
    sin_ang = np.maximum(np.sin(angk), 1e-12)
    X0 = np.tile(xl, (Uk.shape[0], 1))
    good = np.ones(Uk.shape[0], dtype=bool)
    for s in np.linspace(1.0 / steps, 1.0 - 1.0 / steps, steps - 1):
        M = (np.sin((1.0 - s) * angk) * Uk
             + np.sin(s * angk) * axis) / sin_ang
        lval = np.asarray(eng_l_batch(space.lagrangian, X0, M))
        good &= lval < -space.cone_margin * np.einsum("ij,ij->i", M, M)
    ok[idx] = good
    return ok


def _future_directions(space, x, count=192, rng_seed=0):
    """Unit (F = 1) future timelike vectors spread over the cone at x.

    Deterministic for a fixed seed: rejection sampling of Euclidean
    directions against the timelike-with-margin test and membership in
    the axis's cone component, plus the axis itself, normalized to F = 1.
    """
    n = space.dim
    xl = check_point(space, x)
    axis = _axis_at(space, xl)
    rng = np.random.default_rng(rng_seed)
    rows = [axis]
    have = 1
    tries = 0
    while have < count:
        tries += 1
        if tries > 60:
            break
        U = rng.standard_normal((4 * count, n))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        X0 = np.tile(xl, (U.shape[0], 1))
        lval = np.asarray(eng_l_batch(space.lagrangian, X0, U))
        keep = lval < -space.cone_margin
        if np.any(keep):
            cand = U[keep]
            cand = cand[_same_cone_component(space, xl, axis, cand)]
            if cand.shape[0]:
                rows.append(cand)
                have += cand.shape[0]
    U = np.vstack([np.atleast_2d(r) for r in rows])[:count]
    if U.shape[0] < max(8, count // 8):
        raise NumericalError(
            "could not populate the future cone at %s (found %d directions)"
            % (xl, U.shape[0]))
    X0 = np.tile(xl, (U.shape[0], 1))
    F = np.sqrt(-2.0 * np.asarray(eng_l_batch(space.lagrangian, X0, U)))
    return U / F[:, None]


def polar_cone_margin(space, x, omega, count=192, rng_seed=0):
    """max of omega(v) over sampled unit future timelike v.

    Negative means omega lies in the polar cone within the sampling
    resolution (the defining condition quantifies over all causal v).
    """
    _require_lorentzian(space, "the polar cone test")
    om = np.asarray(as_coord_list(omega), dtype=float)
    V = _future_directions(space, x, count=count, rng_seed=rng_seed)
    return float(np.max(V @ om))


def _is_timelike_future(space, xl, va, ell_axis):
    n2 = float(va @ va)
    if n2 == 0.0 or not np.all(np.isfinite(va)):
        return False
    lval = lagrangian_value(space, xl, list(va))
    return lval < -space.cone_margin * n2 and float(ell_axis @ va) < 0.0


def legendre_inverse(space, x, omega, tol=1e-10, max_iter=80,
                     samples=192, rng_seed=0):
    """Invert dL/dv = omega on the future timelike cone by damped Newton.

    The initial guess raises omega with the fundamental tensor at the
    cone axis; every Newton step backtracks until the iterate stays
    timelike future and the residual drops. dL/dv is a diffeomorphism on
    the open cone but stiff near its boundary, hence the damping.
    """
    _require_lorentzian(space, "Legendre inversion")
    xl = check_point(space, x)
    om = np.asarray(as_coord_list(omega), dtype=float)
    if om.shape != (space.dim,):
        raise ValidationError("covector has length %d, expected %d"
                              % (om.size, space.dim))
    scale = max(1.0, float(np.linalg.norm(om)))
    if polar_cone_margin(space, xl, om, count=samples,
                         rng_seed=rng_seed) >= 0.0:
        raise AdmissibilityError(
            "covector %s lies outside the polar cone at %s; the inverse "
            "Legendre transform is only defined there" % (om.tolist(), xl))

    n = space.dim
    axis = _axis_at(space, xl)
    ell_axis = _legendre_coords(space, xl, list(axis))
    gA = np.array([[float(d.real(c)) for c in row]
                   for row in eng.metric(space.lagrangian, n, xl, list(axis))])
    v = np.linalg.solve(gA, om)
    if not _is_timelike_future(space, xl, v, ell_axis):
        # non-quadratic cones can throw the isotropic guess outside;
        # restart from the best sampled interior ray at matched scale
        V = _future_directions(space, xl, count=samples, rng_seed=rng_seed)
        u = V[int(np.argmin(V @ om))]
        ell_u = _legendre_coords(space, xl, list(u))
        v = u * float(np.linalg.norm(om) / max(np.linalg.norm(ell_u), 1e-12))

    rn = math.inf
    for _ in range(int(max_iter)):
        res = _legendre_coords(space, xl, list(v)) - om
        rn = float(np.linalg.norm(res))
        if rn <= tol * scale:
            return Vec(v, Pt(xl))
        g = np.array([[float(d.real(c)) for c in row]
                      for row in eng.metric(space.lagrangian, n, xl, list(v))])
        step = -np.linalg.solve(g, res)
        alpha = 1.0
        accepted = False
        while alpha >= 2.0 ** -40:
            vn = v + alpha * step
            if _is_timelike_future(space, xl, vn, ell_axis):
                rn_new = float(np.linalg.norm(
                    _legendre_coords(space, xl, list(vn)) - om))
                if rn_new <= (1.0 - 0.25 * alpha) * rn:
                    v = vn
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break
    res = _legendre_coords(space, xl, list(v)) - om
    rn = float(np.linalg.norm(res))
    if rn <= tol * scale:
        return Vec(v, Pt(xl))
    raise NumericalError(
        "Legendre inversion stalled with residual %g at v = %s"
        % (rn, v.tolist()))


class LagrangeTensorData:
    """Lagrange tensor J with expansion/shear and weighted deformations.

    J lives in the parallel transverse frame along one unit timelike
    geodesic, integrated from J(0) = 0, J'(0) = I; n is the transverse
    dimension (dim - 1). B = J' J^{-1}, theta = trace B, sigma the
    traceless part; the _eps fields carry the factor e^{-2(eps-1)psi/n}
    and the psi' subtraction. Node 0 holds NaN for everything built from
    J^{-1} (matching the 1/t blowup); arrays stop strictly before the
    first conjugate point when one is found (truncated records that).
    """

    __slots__ = ("td", "weight", "eps", "t", "phi", "n", "J", "Jp", "B",
                 "theta", "sigma", "B_eps", "theta_eps", "sigma_eps",
                 "truncated", "conjugate_t", "keep", "diagnostics")

    def __init__(self, td, weight, eps, t, phi, n, J, Jp, B, theta, sigma,
                 B_eps, theta_eps, sigma_eps, truncated, conjugate_t, keep,
                 diagnostics):
        self.td = td
        self.weight = weight
        self.eps = eps
        self.t = t
        self.phi = phi
        self.n = n
        self.J = J
        self.Jp = Jp
        self.B = B
        self.theta = theta
        self.sigma = sigma
        self.B_eps = B_eps
        self.theta_eps = theta_eps
        self.sigma_eps = sigma_eps
        self.truncated = truncated
        self.conjugate_t = conjugate_t
        self.keep = keep
        self.diagnostics = diagnostics

    def write_csv(self, fname):
        detJ = np.linalg.det(self.J)
        write_csv(fname, ["t", "tau", "theta", "theta_eps", "detJ"],
                  [self.t, self.phi, self.theta, self.theta_eps, detJ])


def _deformation(weight, eps, n, keep):
    """(phi, factor) on the first keep nodes for a given eps."""
    if weight.eps == eps:
        phi = weight.phi
    else:
        phi = reparametrize(weight.path, weight, eps)[0]
    factor = np.exp((-2.0 * (eps - 1.0) / n) * weight.psi[:keep])
    return phi[:keep], factor


def lagrange_tensor(space, path, eps, density=None, weight=None,
                    n_steps=400):
    """Integrate the Lagrange tensor field along a unit timelike geodesic.

    path must be unit-speed timelike (L(eta') = -1/2). weight, when
    given, must live on the same (n_steps + 1)-node grid; otherwise it is
    built from density (or the space's natural density).
    """
    _require_lorentzian(space, "Lagrange tensor data")
    eps = float(eps)
    lval = lagrangian_value(space, list(path.points[0]),
                            list(path.velocities[0]))
    if abs(lval + 0.5) > 1e-8:
        raise ValidationError(
            "lagrange_tensor needs a unit timelike geodesic "
            "(L(eta') = -1/2), got L = %r" % lval)

    td = transverse_data(space, path, n_steps=n_steps)
    if weight is None:
        weight = weight_from_density(space, density, path, n_steps=n_steps)
    elif weight.t.size != td.t.size or float(
            np.max(np.abs(weight.t - td.t))) > 1e-12 * max(1.0, td.t[-1]):
        raise ValidationError(
            "weight profile and transverse data use different time grids")
    phi_full, phi_inv, _ = reparametrize(path, weight, eps)
    weight = weight.with_phi(phi_full, phi_inv, eps)

    t = td.t
    keep = t.size
    tc = first_conjugate_point(td)
    truncated = bool(tc is not None and tc <= t[-1])
    if truncated:
        keep = int(np.searchsorted(t, tc * (1.0 - 1e-9)))
    if keep < 8:
        raise NumericalError(
            "conjugate point at t = %r leaves too few nodes" % tc)

    n = td.m
    J = td.Y[:keep].transpose(0, 2, 1).copy()
    Jp = td.Yp[:keep].transpose(0, 2, 1).copy()
    B = np.full((keep, n, n), np.nan)
    # B = J' J^{-1} = (Y^{-1} Y')^T row-wise
    B[1:] = np.linalg.solve(td.Y[1:keep], td.Yp[1:keep]).transpose(0, 2, 1)
    theta = np.full(keep, np.nan)
    theta[1:] = np.trace(B[1:], axis1=1, axis2=2)
    eye = np.eye(n)
    sigma = B - (theta / n)[:, None, None] * eye

    phi, factor = _deformation(weight, eps, n, keep)
    B_eps = factor[:, None, None] * (
        B - (weight.dpsi[:keep] / n)[:, None, None] * eye)
    theta_eps = np.full(keep, np.nan)
    theta_eps[1:] = np.trace(B_eps[1:], axis1=1, axis2=2)
    sigma_eps = B_eps - (theta_eps / n)[:, None, None] * eye

    # the Lagrange condition J^T J' - (J')^T J = 0 propagates from t = 0
    cond = float(np.max(np.abs(
        np.einsum("kia,kja->kij", td.Y[:keep], td.Yp[:keep])
        - np.einsum("kia,kja->kij", td.Yp[:keep], td.Y[:keep]))))
    bsym = float(np.max(np.abs(B[1:] - B[1:].transpose(0, 2, 1))))
    diag = {"lagrange_condition": cond, "b_symmetry": bsym,
            "lagrangian_drift": path.lagrangian_drift,
            "reached_t_end": path.reached_t_end}
    return LagrangeTensorData(td, weight, eps, t[:keep], phi, n, J, Jp, B,
                              theta, sigma, B_eps, theta_eps, sigma_eps,
                              truncated, tc, keep, diag)


def _eps_fields(data, eps):
    """(phi, factor, B_eps, theta_eps, sigma_eps) for an eps override."""
    if eps == data.eps:
        return (data.phi, np.exp((-2.0 * (eps - 1.0) / data.n)
                                 * data.weight.psi[:data.keep]),
                data.B_eps, data.theta_eps, data.sigma_eps)
    n = data.n
    phi, factor = _deformation(data.weight, eps, n, data.keep)
    eye = np.eye(n)
    B_eps = factor[:, None, None] * (
        data.B - (data.weight.dpsi[:data.keep] / n)[:, None, None] * eye)
    theta_eps = np.full(data.keep, np.nan)
    theta_eps[1:] = np.trace(B_eps[1:], axis1=1, axis2=2)
    sigma_eps = B_eps - (theta_eps / n)[:, None, None] * eye
    return phi, factor, B_eps, theta_eps, sigma_eps


def check_raychaudhuri(data, N, eps=None, tol=DEFAULT_TOL, scenario=""):
    """(theta_eps o phi^{-1})' <= -Ric_N - tr(sigma_eps^2) - c theta_eps^2.

    Pointwise in the deformed time tau past the small-tau window; Ric_N
    is evaluated on the reparametrized velocity (a factor of the
    deformation squared by 2-homogeneity).
    """
    space = data.weight.path.space
    eps = data.eps if eps is None else float(eps)
    pars = comparison_params(space, N, eps, 0.0)
    c = pars.c
    n = data.n

    tau, factor, _, theta_eps, sigma_eps = _eps_fields(data, eps)
    win = (data.t >= TAU_MIN_FRAC * data.t[-1])
    win[0] = False
    tk = tau[win]
    if tk.size < 4:
        raise ValidationError("no usable window on this Lagrange tensor")

    spl = InterpolatedUnivariateSpline(tau[1:], theta_eps[1:], k=5)
    lhs = spl.derivative(1)(tk)

    ric = np.trace(data.td.rho[:data.keep], axis1=1, axis2=2)
    ric_n = _ricci_n_grid(ric, data.weight.dpsi[:data.keep],
                          data.weight.ddpsi[:data.keep], pars.N, 0.0, n)
    ric_def = (factor ** 2 * ric_n)[win]
    tr_s2 = np.einsum("kij,kji->k", sigma_eps[win], sigma_eps[win])
    drive = c * theta_eps[win] ** 2
    rhs = -ric_def - tr_s2 - drive

    resid = (lhs - rhs) / np.maximum(1.0, np.abs(ric_def) + tr_s2 + drive)
    diag = {"min_residual": float(np.min(resid)),
            "window": [float(tk[0]), float(tk[-1])],
            "lagrange_condition": data.diagnostics["lagrange_condition"]}
    return CheckReport.build(
        "raychaudhuri", scenario, _params_dict(pars), tk, resid,
        float(np.max(resid)), tol, diag)


def riccati_residual(data, eps=None):
    """Max matrixwise residual of the weighted Riccati equation in tau.

    (B_eps o phi^{-1})' + (2 eps / n)(psi o phi^{-1})' B_eps + B_eps^2
    + R_(0,eps) = 0 with R_(0,eps) = e^{-4(eps-1)psi/n} (R + (1/n)(psi''
    + psi'^2/n) I); the N = 0 reference is fixed by the equation itself.
    """
    eps = data.eps if eps is None else float(eps)
    n = data.n
    tau, factor, B_eps, _, _ = _eps_fields(data, eps)
    win = (data.t >= TAU_MIN_FRAC * data.t[-1])
    win[0] = False

    dB = np.empty((int(np.sum(win)), n, n))
    for i in range(n):
        for j in range(n):
            spl = InterpolatedUnivariateSpline(tau[1:], B_eps[1:, i, j], k=5)
            dB[:, i, j] = spl.derivative(1)(tau[win])

    dpsi = data.weight.dpsi[:data.keep]
    ddpsi = data.weight.ddpsi[:data.keep]
    # (psi o phi^{-1})' = psi' / phi' with phi' = 1/factor
    dpsi_tau = (dpsi * factor)[win]
    R0 = (factor[win] ** 2)[:, None, None] * (
        data.td.rho[:data.keep][win]
        + ((ddpsi[win] + dpsi[win] ** 2 / n) / n)[:, None, None] * np.eye(n))
    Bw = B_eps[win]
    resid = (dB + (2.0 * eps / n) * dpsi_tau[:, None, None] * Bw
             + np.einsum("kij,kjl->kil", Bw, Bw) + R0)
    scale = np.maximum(1.0, np.max(np.abs(Bw), axis=(1, 2)) ** 2
                       + np.max(np.abs(R0), axis=(1, 2)))
    return float(np.max(np.max(np.abs(resid), axis=(1, 2)) / scale))


def check_spacetime_bishop_myers(space, params, seeds, t_end=None,
                                 density=None, n_steps=400, tol=DEFAULT_TOL,
                                 scenario=""):
    """Bishop residual plus conjugate-point bounds along timelike seeds.

    Per unit timelike seed: the h1'' + c h1 Ric_N <= 0 profile check, the
    first conjugate time t0 <= b pi/sqrt(cK), and phi(t0) <= pi/sqrt(cK).
    A seed with no conjugate point before its horizon fails the check.
    """
    _require_lorentzian(space, "the spacetime conjugate-point bound")
    if not params.K > 0.0:
        raise ValidationError("these conjugate-point bounds need K > 0")
    cK = params.c * params.K
    bound_tau = math.pi / math.sqrt(cK)
    bound_t = params.b * bound_tau
    if t_end is None:
        t_end = 1.2 * bound_t

    grid = []
    resid = []
    t0s = []
    phi0s = []
    bishop_max = []
    notes = []
    for i, (x0, v0) in enumerate(seeds):
        probe = integrate_geodesic(space, x0, v0, float(t_end))
        t_use = float(t_end)
        if not probe.reached_t_end:
            # stay a few percent below the chart edge: warped charts
            # degenerate there and the frame transport turns stiff
            t_use = 0.97 * float(probe.t_grid[-1])
        if params.eps != 1.0 and (density is not None
                                  or space.natural_density is not None):
            # cap where deformed time saturates: once phi' collapses the
            # tau-image of the grid clusters below spline resolution
            wpro = weight_from_density(space, density, probe)
            rel = (2.0 * (params.eps - 1.0) / params.m) * wpro.psi
            rel = np.exp(rel - np.max(rel))
            alive = np.nonzero(rel >= 3e-2)[0]
            if alive.size and alive[-1] + 1 < wpro.t.size:
                t_use = min(t_use, float(wpro.t[alive[-1]]))
        profile = bishop_profile(space, x0, v0, t_use, params,
                                 density=density, n_steps=n_steps)
        rb = check_bishop(profile, tol=tol)
        bishop_max.append(rb.max_violation)
        grid.append(float(i))
        tc = profile.conjugate_t
        if tc is None:
            t0s.append(None)
            phi0s.append(None)
            resid.append(math.inf)
            notes.append(
                "no conjugate point up to t = %g (horizon %g)"
                % (t_end, profile.weight.t[-1]))
            continue
        phi0 = float(InterpolatedUnivariateSpline(
            profile.weight.t, profile.weight.phi, k=5)(tc))
        t0s.append(float(tc))
        phi0s.append(phi0)
        resid.append(max(rb.max_violation,
                         (tc - bound_t) / max(1.0, bound_t),
                         (phi0 - bound_tau) / max(1.0, bound_tau)))
        notes.append("")

    diag = {"t0": t0s, "phi_t0": phi0s, "bound_t": bound_t,
            "bound_tau": bound_tau, "bishop_max": bishop_max,
            "notes": [s for s in notes if s]}
    return CheckReport.build(
        "spacetime_bishop_myers", scenario, _params_dict(params), grid,
        resid, float(np.max(resid)), tol, diag)


def radial_dalembertian(space, path, t, density=None, weight=None,
                        n_steps=400):
    """psi-d'Alembertian of -u at eta(t) on a radial timelike geodesic.

    u is the time separation from eta(0) along the geodesic, so the
    value is trace B(t) - psi'(t); evaluation past the first conjugate
    point is refused.
    """
    _require_lorentzian(space, "the radial d'Alembertian")
    lval = lagrangian_value(space, list(path.points[0]),
                            list(path.velocities[0]))
    if abs(lval + 0.5) > 1e-8:
        raise ValidationError(
            "the radial d'Alembertian needs a unit timelike geodesic "
            "(L(eta') = -1/2), got L = %r" % lval)
    td = transverse_data(space, path, n_steps=n_steps)
    if weight is None:
        weight = weight_from_density(space, density, path, n_steps=n_steps)
    return radial_laplacian(td, weight, t)


def check_lorentz_laplacian(space, params, x0, v0, t_end, density=None,
                            n_steps=400, tol=DEFAULT_TOL, scenario=""):
    """d'Alembertian comparison along one radial timelike geodesic.

    Same bound as the positive-signature radial comparison: trace B -
    psi' against s'_cK(t/b)/(c rho s_cK(t/b)) with the a/b rho-rule,
    plus the intermediate deformed bound.
    """
    _require_lorentzian(space, "the d'Alembertian comparison")
    xl, vl = check_admissible(space, x0, v0)
    F = finsler_norm(space, xl, vl)
    if abs(F - 1.0) > 1e-8:
        raise ValidationError(
            "the comparison needs a unit timelike seed, got F = %r" % F)
    path = integrate_geodesic(space, xl, vl, float(t_end))
    td = transverse_data(space, path, n_steps=n_steps)
    weight = weight_from_density(space, density, path, n_steps=n_steps)
    rep = check_laplacian_comparison(td, weight, params, tol=tol,
                                     scenario=scenario)
    return CheckReport.build(
        "lorentz_laplacian", scenario, rep.params, rep.grid, rep.residuals,
        rep.max_violation, tol, rep.diagnostics)


def _sector_grid(space, x, axis, alpha, n_dirs):
    """Quadrature nodes over a cone sector of the unit timelike indicatrix.

    The sector is the set of F = 1 rays within Euclidean angle alpha of
    the axis; nodes come from a Gauss-Legendre polar rule times a
    periodic trapezoid azimuth (a full product grid in dim 4), with an
    independent coarser companion grid riding along at zero main weight
    for the error estimate. Returns (V0, w, w_sub) exactly like the
    positive-signature indicatrix grid.
    """
    n = space.dim
    L = space.lagrangian
    xl = list(x)
    if not 0.0 < alpha < 0.5 * math.pi:
        raise ValidationError(
            "sector angular radius must lie in (0, pi/2), got %g" % alpha)
    if n > 4:
        raise ValidationError("sector quadrature covers dim <= 4")
    a_hat = _axis_at(space, xl, list(axis))
    Q = np.linalg.qr(np.hstack([a_hat[:, None], np.eye(n)[:, : n - 1]]))[0]
    Q[:, 0] = a_hat  # QR may flip the sign of the first column

    blocks = []
    if n == 2:
        p = int(n_dirs or 24)
        for k in (p, max(6, (2 * p) // 3)):
            th, wt = np.polynomial.legendre.leggauss(k)
            th = alpha * th
            U = np.outer(np.cos(th), Q[:, 0]) + np.outer(np.sin(th), Q[:, 1])
            dU = [np.outer(-np.sin(th), Q[:, 0])
                  + np.outer(np.cos(th), Q[:, 1])]
            blocks.append((U, dU, alpha * wt))
    elif n == 3:
        pu = int(n_dirs or 10)
        for ku, kp in ((pu, pu + 2), (max(5, (2 * pu) // 3), 8)):
            uq, wu = np.polynomial.legendre.leggauss(ku)
            lo = math.cos(alpha)
            u1 = 0.5 * (1.0 - lo) * uq + 0.5 * (1.0 + lo)
            wu = 0.5 * (1.0 - lo) * wu
            phi = 2.0 * math.pi * np.arange(kp) / kp
            UQ, PH = np.meshgrid(u1, phi, indexing="ij")
            uf = UQ.ravel()
            su = np.sqrt(1.0 - uf ** 2)
            cp, sp_ = np.cos(PH).ravel(), np.sin(PH).ravel()
            wvec = cp[:, None] * Q[:, 1] + sp_[:, None] * Q[:, 2]
            dw = -sp_[:, None] * Q[:, 1] + cp[:, None] * Q[:, 2]
            U = uf[:, None] * Q[:, 0] + su[:, None] * wvec
            dU = [Q[:, 0] - (uf / su)[:, None] * wvec, su[:, None] * dw]
            blocks.append((U, dU,
                           np.outer(wu, np.full(kp, 2.0 * math.pi / kp))
                           .ravel()))
    else:
        pu = int(n_dirs or 8)
        for ku, k2, kp in ((pu, pu, pu + 2),
                           (max(5, (2 * pu) // 3), max(5, (2 * pu) // 3), 8)):
            uq, wu = np.polynomial.legendre.leggauss(ku)
            lo = math.cos(alpha)
            u1 = 0.5 * (1.0 - lo) * uq + 0.5 * (1.0 + lo)
            w1 = 0.5 * (1.0 - lo) * wu
            u2, w2 = np.polynomial.legendre.leggauss(k2)
            phi = 2.0 * math.pi * np.arange(kp) / kp
            A_, B_, PH = np.meshgrid(u1, u2, phi, indexing="ij")
            uf, u2f, phf = A_.ravel(), B_.ravel(), PH.ravel()
            su = np.sqrt(1.0 - uf ** 2)
            s2 = np.sqrt(1.0 - u2f ** 2)
            cp, sp_ = np.cos(phf), np.sin(phf)
            wvec = (s2 * cp)[:, None] * Q[:, 1] \
                + (s2 * sp_)[:, None] * Q[:, 2] + u2f[:, None] * Q[:, 3]
            dw2 = (-u2f * cp / s2)[:, None] * Q[:, 1] \
                + (-u2f * sp_ / s2)[:, None] * Q[:, 2] \
                + np.ones_like(u2f)[:, None] * Q[:, 3]
            dwp = (-s2 * sp_)[:, None] * Q[:, 1] + (s2 * cp)[:, None] * Q[:, 2]
            U = uf[:, None] * Q[:, 0] + su[:, None] * wvec
            dU = [Q[:, 0] - (uf / su)[:, None] * wvec,
                  su[:, None] * dw2, su[:, None] * dwp]
            qw = (w1[:, None, None] * w2[None, :, None]
                  * np.full(kp, 2.0 * math.pi / kp)[None, None, :]).ravel()
            blocks.append((U, dU, qw))

    U = np.vstack([b[0] for b in blocks])
    kdim = len(blocks[0][1])
    dUs = [np.vstack([b[1][i] for b in blocks]) for i in range(kdim)]
    qw = np.concatenate([blocks[0][2], np.zeros(blocks[1][0].shape[0])])
    qw_sub = np.concatenate([np.zeros(blocks[0][0].shape[0]), blocks[1][2]])

    P = U.shape[0]
    X0 = np.tile(np.asarray(xl, dtype=float), (P, 1))
    lval = np.asarray(eng_l_batch(L, X0, U))
    if np.any(lval >= -space.cone_margin):
        raise ValidationError(
            "sector (angle %g) pokes outside the future timelike cone"
            % alpha)
    g = grid_metric(L, n, X0, U)
    F = np.sqrt(-2.0 * lval)
    ell = np.einsum("pab,pb->pa", g, U)
    V0 = U / F[:, None]

    dV = []
    for dU in dUs:
        # F = sqrt(-2L), so dF(w) = -(ell . w)/F on the timelike cone
        dF = -np.einsum("pa,pa->p", ell, dU) / F
        dV.append(dU / F[:, None] - U * (dF / F ** 2)[:, None])
    G = np.empty((P, kdim, kdim))
    for i in range(kdim):
        for j in range(kdim):
            G[:, i, j] = np.einsum("pa,pab,pb->p", dV[i], g, dV[j])
    if kdim == 1:
        dens = np.sqrt(np.abs(G[:, 0, 0]))
    else:
        dens = np.sqrt(np.abs(np.linalg.det(G)))

    w = qw * dens
    w_sub = qw_sub * dens
    live = (w != 0.0) | (w_sub != 0.0)
    return V0[live], w[live], w_sub[live]


def sclv_volume_check(space, params, origin, sector, r, R, density=None,
                      n_dirs=None, n_steps=None, tol=DEFAULT_TOL,
                      vol_tol=DEFAULT_TOL, scenario=""):
    """Cone-sector volume ratio against the s_cK^{1/c} profile bound.

    sector is {"axis": direction, "angle": angular radius, "cut": T}
    with T a constant (case A) or a callable v -> T(v) (case B, which
    requires K = 0 and uses inf T in the bound). Volumes integrate
    e^{-psi} det J along every sector ray out to the fraction r resp. R
    of its cut time; all rays must stay conjugate-free that far.
    """
    _require_lorentzian(space, "the sector volume comparison")
    p = params
    xl = check_point(space, origin)
    if not 0.0 < r < R <= 1.0:
        raise ValidationError("need 0 < r < R <= 1, got r=%g R=%g" % (r, R))
    for key in ("axis", "angle", "cut"):
        if key not in sector:
            raise ValidationError("sector spec is missing %r" % key)
    cK = p.c * p.K
    cut = sector["cut"]
    case_b = callable(cut)
    if case_b and p.K != 0.0:
        raise ValidationError(
            "a non-constant cut function is only covered for K = 0")
    if density is None:
        density = space.natural_density
    if density is None:
        raise ValidationError(
            "space %s declares no natural density; supply one explicitly"
            % space.name)

    V0, w, w_sub = _sector_grid(space, xl, sector["axis"],
                                float(sector["angle"]), n_dirs)
    P = V0.shape[0]
    if case_b:
        T = np.array([float(cut(V0[i])) for i in range(P)])
    else:
        T = np.full(P, float(cut))
    if np.any(T <= 0.0) or not np.all(np.isfinite(T)):
        raise ValidationError("cut times must be positive and finite")

    n = space.dim
    m = n - 1
    n_t = int(n_steps or (64 if n <= 3 else 40))
    n_t += (-n_t) % 4
    lam = R * T
    X0 = np.tile(xl, (P, 1))
    try:
        bundle = integrate_bundle(space, X0, V0 * lam[:, None], 1.0,
                                  n_steps=4 * n_t)
    except NumericalError as exc:
        raise ValidationError(
            "some sector ray leaves the normal range covered by this "
            "chart before its cut time (%s)" % exc) from exc
    if np.any(bundle.valid_len < 4 * n_t + 1):
        raise ValidationError(
            "the sector leaves the chart along %d rays before the cut time"
            % int(np.sum(bundle.valid_len < 4 * n_t + 1)))

    detY = _bundle_det_jacobi(space, bundle, n_t)
    if np.any(detY[:, 1:] <= 0.0):
        raise ValidationError(
            "a sector ray reaches a conjugate point before its cut time")

    s_out = bundle.t[::4]
    Xo = bundle.X[:, ::4, :].reshape(P * (n_t + 1), n)
    Vo = bundle.V[:, ::4, :].reshape(P * (n_t + 1), n)
    detg = np.linalg.det(_chunked_matrix(grid_metric, space.lagrangian, n,
                                         Xo, Vo))
    if np.any(detg >= 0.0):
        raise NumericalError("fundamental tensor determinant lost its sign")
    xb = [Xo[:, i] for i in range(n)]
    rho = np.broadcast_to(np.asarray(d.real(density(xb)), dtype=float),
                          (P * (n_t + 1),))
    if np.any(rho <= 0.0):
        raise ValidationError("density must be positive on the sector")
    psi = (0.5 * np.log(-detg) - np.log(rho)).reshape(P, n_t + 1)

    # rescaled rays: det J w.r.t. unit time at t = lam*s is
    # lam^m detY(s), and dt = lam ds, so each ray carries lam^(m+1)
    f = np.exp(-psi) * detY
    frac = r / R
    fac = lam ** (m + 1)
    I_R = np.empty(P)
    I_r = np.empty(P)
    I_Rh = np.empty(P)
    I_rh = np.empty(P)
    for i in range(P):
        spl = InterpolatedUnivariateSpline(s_out, f[i], k=5)
        I_R[i] = spl.integral(0.0, 1.0)
        I_r[i] = spl.integral(0.0, frac)
        sub = InterpolatedUnivariateSpline(s_out[::2], f[i, ::2], k=5)
        I_Rh[i] = sub.integral(0.0, 1.0)
        I_rh[i] = sub.integral(0.0, frac)
    vol_R = float(w @ (fac * I_R))
    vol_r = float(w @ (fac * I_r))
    est_R = float(w @ np.abs(fac * (I_R - I_Rh)))
    est_R += abs(vol_R - float(w_sub @ (fac * I_R)))
    est_r = float(w @ np.abs(fac * (I_r - I_rh)))
    est_r += abs(vol_r - float(w_sub @ (fac * I_r)))
    if est_R > vol_tol * max(1.0, vol_R) or est_r > vol_tol * max(1.0, vol_r):
        raise NumericalError(
            "quadrature error estimate (%g, %g) exceeds the requested %g; "
            "raise n_dirs / n_steps" % (est_r, est_R, vol_tol))

    ratio = vol_R / vol_r
    Tbar = float(np.min(T))
    upper = R * Tbar / p.a
    if cK > 0.0:
        upper = min(upper, math.pi / math.sqrt(cK))
    prof = lambda s: comparison_s(cK, s)[0] ** (1.0 / p.c)
    num = quad(prof, 0.0, upper, limit=200)[0]
    den = quad(prof, 0.0, r * Tbar / p.b, limit=200)[0]
    bound = (p.b / p.a) * num / den

    resid = (ratio - bound) / max(1.0, bound)
    diag = {"ratio": ratio, "bound": bound, "vol_r": vol_r, "vol_R": vol_R,
            "est_r": est_r, "est_R": est_R, "rays": int(P),
            "case": "B" if case_b else "A", "T": Tbar}
    return CheckReport.build(
        "sclv_bishop_gromov", scenario, _params_dict(p), [float(R)],
        [resid], resid, tol, diag)


def _scalar_jets(f, xl):
    """(df, Hf) of a dual-safe scalar function by nested seeding."""
    n = len(xl)
    df = np.empty(n)
    Hf = np.empty((n, n))
    for a in range(n):
        lv = d.fresh_level()
        xs = list(xl)
        xs[a] = d.Dual(lv, xs[a], 1.0)
        df[a] = float(d.real(d.eps_part(f(xs), lv)))
        for j in range(n):
            lv_a = d.fresh_level()
            lv_j = d.fresh_level()
            xs = list(xl)
            xs[a] = d.Dual(lv_a, xs[a], 1.0)
            xs[j] = d.Dual(lv_j, xs[j], 1.0)
            Hf[a, j] = float(d.real(d.eps_part(d.eps_part(f(xs), lv_j),
                                               lv_a)))
    return df, Hf


def hessian_symmetry_check(space, f, x, tol=1e-5, grad_tol=1e-7,
                           samples=192, rng_seed=0, scenario=""):
    """Symmetry of the Hessian of a temporal function at one point.

    f must be temporal at x (-df in the polar cone, sampled with margin
    1e-8). The gradient is the Legendre inverse of -df; the Hessian is
    its Chern covariant differential with the gradient itself as
    reference vector, with dGrad/dx obtained by implicit differentiation
    of dL/dv(x, Grad(x)) = -df(x).
    """
    _require_lorentzian(space, "the Hessian symmetry check")
    xl = check_point(space, x)
    n = space.dim
    df, Hf = _scalar_jets(f, xl)
    om = -df
    om_scale = max(1.0, float(np.linalg.norm(om)))
    margin = polar_cone_margin(space, xl, om, count=samples,
                               rng_seed=rng_seed)
    if margin >= -1e-8 * om_scale:
        raise AdmissibilityError(
            "f is not temporal at %s: -df attains %g on the sampled future "
            "cone (needs to stay negative)" % (xl, margin))

    grad = legendre_inverse(space, xl, om, samples=samples,
                            rng_seed=rng_seed)
    G = np.asarray(grad.coords)
    gmat = np.array([[float(d.real(c)) for c in row]
                     for row in eng.metric(space.lagrangian, n, xl,
                                           list(G))])

    # d/dx^j of dL/dv(x, G(x)) = -df: g dG/dx^j = -Hf[:,j] - d2L/dxdv
    Lxv = np.empty((n, n))
    for j in range(n):
        lv = d.fresh_level()
        xs = list(xl)
        xs[j] = d.Dual(lv, xs[j], 1.0)
        gv = eng.grad_v(space.lagrangian, n, xs, list(G))
        for a in range(n):
            Lxv[a, j] = float(d.real(d.eps_part(gv[a], lv)))
    dG = np.linalg.solve(gmat, -Hf - Lxv)
    ch = connection_at(space, xl, list(G)).chern
    H = dG + np.einsum("ijk,k->ij", ch, G)

    M = gmat @ H  # M[a, j] = g_G(Hess(e_j), e_a)
    sym = float(np.max(np.abs(M - M.T))) / max(1.0, float(np.max(np.abs(M))))
    grad_resid = float(np.max(np.abs(gmat @ G - om))) / om_scale

    passed = sym <= tol and grad_resid <= grad_tol
    diag = {"symmetry": sym, "gradient_identity": grad_resid,
            "gradient_tol": grad_tol, "polar_margin": margin,
            "gradient": [float(c) for c in G],
            "hessian": [[float(c) for c in row] for row in M]}
    return CheckReport.build(
        "hessian_symmetry", scenario, {"x": xl}, [0.0], [sym],
        sym if passed else max(sym, 2.0 * tol), tol, diag)
