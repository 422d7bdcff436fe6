"""Comparison-theorem verifiers on positive-definite weighted spaces.

The chain implemented here: the comparison functions s_kappa, the Bishop
profile h(t) = e^{-c psi}(det A)^{c/2} with its reparametrized form
h1 = h o phi^{-1}, the differential Bishop inequality
h1'' + c h1 Ric_N <= 0, conjugate-point bounds in both the time and the
deformed phi parameter, the weighted-Laplacian bound along radial
geodesics, and forward-ball volume ratios.

The two standing hypotheses (the curvature lower bound
Ric_N >= K F^2 e^{4(eps-1)psi/m} and the two-sided weight bound
a <= e^{-2(eps-1)psi/m} <= b) are validated by sampling through
validate_hypotheses before any verdict is trusted; a violation raises
HypothesisRejection because a failed hypothesis says nothing about the
theorem being checked.
"""

import math

import numpy as np
from scipy.integrate import quad, simpson
from scipy.interpolate import InterpolatedUnivariateSpline

from . import _dual as d
from . import _engine as eng
from .connection import eng_l_batch, integrate_bundle, integrate_geodesic
from .core import check_admissible, check_point, finsler_norm, \
    sample_admissible
from .curvature import first_conjugate_point, grid_chern_hv, grid_curvature, \
    grid_metric, grid_ricci, transverse_data, transverse_frame_at
from .errors import HypothesisRejection, NumericalError, ValidationError
from .report import CheckReport, write_csv
from .weighted import density_weight_function, reparametrize, \
    weight_from_density, weighted_ricci

DEFAULT_TOL = 1e-3
# small-tau exclusion: below this fraction of the horizon h1'' is dominated
# by the O(tau^{cm-2}) singularity and the residual is meaningless
TAU_MIN_FRAC = 0.05


def comparison_s(kappa, t):
    """(s_kappa(t), s_kappa'(t)): the solution of s'' + kappa s = 0,
    s(0) = 0, s'(0) = 1; accepts scalars or arrays."""
    kappa = float(kappa)
    ta = np.asarray(t, dtype=float)
    scalar = ta.ndim == 0
    ta = np.atleast_1d(ta)
    if kappa > 0.0:
        sq = math.sqrt(kappa)
        top = math.pi / sq
        if np.any(ta < -1e-12) or np.any(ta > top * (1.0 + 1e-12)):
            raise ValidationError(
                "t must lie in [0, pi/sqrt(kappa)] = [0, %g] for kappa = %g"
                % (top, kappa))
        s = np.sin(sq * ta) / sq
        sp = np.cos(sq * ta)
    elif kappa == 0.0:
        s = ta.copy()
        sp = np.ones_like(ta)
    else:
        sq = math.sqrt(-kappa)
        s = np.sinh(sq * ta) / sq
        sp = np.cosh(sq * ta)
    if scalar:
        return float(s[0]), float(sp[0])
    return s, sp


def _params_dict(params):
    return {"N": params.N, "eps": params.eps, "K": params.K,
            "a": params.a, "b": params.b, "c": params.c}


def _regime_floor(space):
    return 1.0 if space.signature == "positive" else 0.0


def _ricci_n_grid(ric, dpsi, ddpsi, N, n_low, m):
    """Vectorized weighted Ricci along one geodesic from precomputed jets."""
    N = float(N)
    n_ref = n_low + m
    if n_low < N < n_ref:
        raise ValidationError(
            "N = %g lies in the forbidden interval (%g, %g)"
            % (N, n_low, n_ref))
    if math.isinf(N):
        return ric + ddpsi
    if N == n_ref:
        if float(np.max(np.abs(dpsi))) > 1e-8:
            raise ValidationError(
                "N = %g needs psi' = 0 along the geodesic; got |psi'| up "
                "to %g (the weighted Ricci is -inf there)"
                % (N, float(np.max(np.abs(dpsi)))))
        return ric + ddpsi
    return ric + ddpsi - dpsi * dpsi / (N - n_ref)


class BishopProfile:
    """h, h1 and their spline derivatives along one unit-speed geodesic.

    h lives on the time grid t, h1 on the deformed grid tau = phi(t);
    the node values coincide because tau_k = phi(t_k). Arrays stop
    strictly before the first conjugate point (conjugate_t records it).
    """

    __slots__ = ("td", "weight", "params", "t", "tau", "h", "h1", "dh1",
                 "ddh1", "ricci_along", "conjugate_t", "diagnostics",
                 "_spl", "_exp")

    def __init__(self, td, weight, params, t, tau, h, dh1, ddh1,
                 ricci_along, conjugate_t, diagnostics, spl, exp):
        self.td = td
        self.weight = weight
        self.params = params
        self.t = t
        self.tau = tau
        self.h = h
        self.h1 = h
        self.dh1 = dh1
        self.ddh1 = ddh1
        self.ricci_along = ricci_along
        self.conjugate_t = conjugate_t
        self.diagnostics = diagnostics
        self._spl = spl
        self._exp = exp

    def h1_of(self, tau):
        # the spline carries the smooth root profile h1^(1/(c m));
        # clamp tiny negative wiggle next to the tau = 0 zero
        w = np.maximum(self._spl(tau), 0.0)
        return w ** self._exp

    def write_csv(self, fname):
        write_csv(fname, ["t", "tau", "h1", "dh1", "ddh1", "ricci"],
                  [self.t, self.tau, self.h1, self.dh1, self.ddh1,
                   self.ricci_along])


def bishop_profile(space, x0, v0, t_end, params, density=None, n_steps=400):
    """Integrate one unit-speed geodesic and build its Bishop profile."""
    xl, vl = check_admissible(space, x0, v0)
    F = finsler_norm(space, xl, vl)
    if abs(F - 1.0) > 1e-8:
        raise ValidationError(
            "bishop_profile needs a unit-speed seed, got F = %r" % F)
    path = integrate_geodesic(space, xl, vl, float(t_end))
    td = transverse_data(space, path, n_steps=n_steps)
    weight = weight_from_density(space, density, path, n_steps=n_steps)
    phi, phi_inv, _ = reparametrize(path, weight, params.eps)
    weight = weight.with_phi(phi, phi_inv, params.eps)

    t = td.t
    keep = t.size
    tc = first_conjugate_point(td)
    if tc is not None and tc <= t[-1]:
        keep = int(np.searchsorted(t, tc * (1.0 - 1e-9)))
        if params.m > 1:
            # w ~ (tc - t)^(1/m) has a far-end cusp once m >= 2; the
            # stride-2 refinement spline needs clearance d with
            # (2 dt / d)^4 well under 1e-4 to stay resolvable
            keep = min(keep, int(np.searchsorted(t, tc)) - 90)
    if keep < 16:
        raise NumericalError(
            "conjugate point at t = %r leaves too few profile nodes" % tc)

    c = params.c
    e = c * params.m
    psi = weight.psi[:keep]
    # h = w^(c m) with the root profile w = e^(-psi/m) |det Y|^(1/m);
    # w is smooth with a simple zero at t = 0, while h itself has a
    # power cusp there whenever c m < 1, so all splines live on w
    w = np.exp(-psi / params.m) * np.abs(td.detY[:keep]) ** (1.0 / params.m)
    if np.any(w[1:] <= 0.0):
        raise NumericalError("h lost positivity before the conjugate point")
    h = w ** e
    tau = phi[:keep]

    spl = InterpolatedUnivariateSpline(tau, w, k=5)
    wp = spl.derivative(1)(tau)
    wpp = spl.derivative(2)(tau)
    dh1 = np.empty_like(h)
    ddh1 = np.empty_like(h)
    we1 = w[1:] ** (e - 1.0)
    dh1[1:] = e * we1 * wp[1:]
    ddh1[1:] = (e * (e - 1.0) * (we1 / w[1:]) * wp[1:] ** 2
                + e * we1 * wpp[1:])
    if e == 1.0:
        dh1[0] = wp[0]
        ddh1[0] = wpp[0]
    else:
        # true one-sided limits of the cusp
        dh1[0] = math.inf
        ddh1[0] = -math.inf

    xg, vg = path.interp(t[:keep])
    X = np.asarray(xg).T.copy()
    V = np.asarray(vg).T.copy()
    ric = grid_ricci(space.lagrangian, space.dim, X, V)
    ric_n = _ricci_n_grid(ric, weight.dpsi[:keep], weight.ddpsi[:keep],
                          params.N, _regime_floor(space), params.m)
    # Ric_N of the reparametrized velocity eta'(t)/phi'(t): 2-homogeneity
    # turns the 1/phi' rescaling into e^{-4(eps-1)psi/m}
    ricci_along = np.exp((-4.0 * (params.eps - 1.0) / params.m) * psi) * ric_n

    # roundtrip w(t) = w1(phi(t)) at off-node times
    wtspl = InterpolatedUnivariateSpline(t[:keep], w, k=5)
    pspl = InterpolatedUnivariateSpline(t[:keep], tau, k=5)
    tm = 0.5 * (t[1:keep] + t[:keep - 1])[::max(1, keep // 24)]
    rt = float(np.max(np.abs(wtspl(tm) - spl(pspl(tm)))))
    rt /= max(1.0, float(np.max(w)))
    if rt > 1e-7:
        raise NumericalError("h -> h1 roundtrip residual %g" % rt)

    # second-derivative error estimate by de-refinement, past the
    # small-tau exclusion window
    win = tau >= TAU_MIN_FRAC * tau[-1]
    sub = InterpolatedUnivariateSpline(tau[::2], w[::2], k=5)
    swp = sub.derivative(1)(tau[win])
    swpp = sub.derivative(2)(tau[win])
    swe1 = w[win] ** (e - 1.0)
    dd_sub = (e * (e - 1.0) * (swe1 / w[win]) * swp ** 2 + e * swe1 * swpp)
    scale2 = np.maximum(1.0, np.abs(ddh1[win]))
    dd_err = float(np.max(np.abs(dd_sub - ddh1[win]) / scale2))
    if dd_err > 1e-4:
        raise NumericalError(
            "h1'' grid-refinement estimate %g exceeds 1e-4; increase "
            "n_steps" % dd_err)

    # log-log slope of h1 near 0 against the model exponent c*m
    small = tau[1:][tau[1:] <= TAU_MIN_FRAC * tau[-1]]
    if small.size < 4:
        small = tau[1:9]
    slope = float(np.polyfit(np.log(small),
                             e * np.log(np.abs(spl(small))), 1)[0])

    diag = {"roundtrip": rt, "h1_dd_error": dd_err, "slope": slope,
            "slope_expected": c * params.m, "conjugate_t": tc,
            "reached_t_end": path.reached_t_end,
            "lagrangian_drift": path.lagrangian_drift}
    return BishopProfile(td, weight, params, t[:keep], tau, h, dh1, ddh1,
                         ricci_along, tc, diag, spl, e)


def check_bishop(profile, tol=DEFAULT_TOL, scenario=""):
    """Pointwise h1'' + c h1 Ric_N <= 0 past the small-tau window."""
    p = profile.params
    tau = profile.tau
    win = tau >= TAU_MIN_FRAC * tau[-1]
    drive = profile.h1 * profile.ricci_along
    raw = profile.ddh1 + p.c * drive
    resid = raw[win] / np.maximum(1.0, np.abs(drive[win]))

    diag = dict(profile.diagnostics)
    cK = p.c * p.K
    # monotonicity of h1/s_cK (skipping tau = 0 where both vanish)
    ts = tau[1:]
    if cK > 0.0:
        ts = ts[ts < math.pi / math.sqrt(cK) * (1.0 - 1e-12)]
    s, _ = comparison_s(cK, ts)
    q = profile.h1[1:1 + ts.size] / s
    diag["monotone_violation"] = (
        float(np.max(np.diff(q))) if q.size > 1 else 0.0)
    # lim tau h1'(tau) as tau -> 0: near 0, tau h1' = C tau^(c m) +
    # higher order, so extrapolate against tau^(c m) for an unbiased
    # intercept
    k = min(8, tau.size)
    e = p.c * p.m
    diag["limit_tau_dh1"] = float(np.polyfit(
        tau[1:k] ** e, tau[1:k] * profile.dh1[1:k], 1)[1])

    return CheckReport.build(
        "bishop", scenario, _params_dict(p), tau[win], resid,
        float(np.max(resid)), tol, diag)


def check_bonnet_myers(space, params, seeds, t_end=None, density=None,
                       n_steps=400, tol=DEFAULT_TOL, scenario=""):
    """First conjugate time t0 <= b pi/sqrt(cK) and phi(t0) <= pi/sqrt(cK).

    seeds is a list of unit-speed (x0, v0) pairs; one residual per
    geodesic (the worse of the two bound violations, scaled).
    """
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
    notes = []
    for i, (x0, v0) in enumerate(seeds):
        xl, vl = check_admissible(space, x0, v0)
        F = finsler_norm(space, xl, vl)
        if abs(F - 1.0) > 1e-8:
            raise ValidationError(
                "seed %d is not unit speed (F = %r)" % (i, F))
        path = integrate_geodesic(space, xl, vl, float(t_end))
        td = transverse_data(space, path, n_steps=n_steps)
        weight = weight_from_density(space, density, path, n_steps=n_steps)
        phi, _, _ = reparametrize(path, weight, params.eps)
        tc = first_conjugate_point(td)
        grid.append(float(i))
        if tc is None:
            t0s.append(None)
            phi0s.append(None)
            resid.append(math.inf)
            notes.append("no conjugate point up to t = %g (horizon %g)"
                         % (t_end, path.t_grid[-1]))
            continue
        phi0 = float(InterpolatedUnivariateSpline(weight.t, phi, k=5)(tc))
        t0s.append(float(tc))
        phi0s.append(phi0)
        resid.append(max((tc - bound_t) / max(1.0, bound_t),
                         (phi0 - bound_tau) / max(1.0, bound_tau)))
        notes.append("")

    diag = {"t0": t0s, "phi_t0": phi0s, "bound_t": bound_t,
            "bound_tau": bound_tau, "notes": [s for s in notes if s]}
    return CheckReport.build(
        "bonnet_myers", scenario, _params_dict(params), grid, resid,
        float(np.max(resid)), tol, diag)


def radial_laplacian(td, weight, t):
    """Delta_psi u at eta(t): trace B(t) - psi'(t) on a radial geodesic.

    t * trace B extends smoothly through 0 (limit m), so that product is
    what gets splined; evaluation beyond the first conjugate point is
    refused.
    """
    tc = first_conjugate_point(td)
    tmax = td.t[-1] if tc is None else min(td.t[-1], tc)
    ta = np.asarray(t, dtype=float)
    scalar = ta.ndim == 0
    ta = np.atleast_1d(ta)
    if np.any(ta <= 0.0) or np.any(ta > tmax * (1.0 - 1e-12)):
        raise ValidationError(
            "t must lie in (0, %g) (before the horizon and the first "
            "conjugate point)" % tmax)
    # t trace B extends smoothly through t = 0 with limit m (B itself
    # carries no value at the seed node)
    p = np.empty(td.t.size)
    p[0] = float(td.m)
    p[1:] = td.t[1:] * np.trace(td.B[1:], axis1=1, axis2=2)
    keep = td.t <= tmax * (1.0 - 1e-12)
    keep[0] = True
    spl = InterpolatedUnivariateSpline(td.t[keep], p[keep], k=5)
    out = spl(ta) / ta - weight.dpsi_of(ta)
    return float(out[0]) if scalar else out


def check_laplacian_comparison(td, weight, params, tol=DEFAULT_TOL,
                               scenario=""):
    """Delta_psi u <= s'_cK(t/b) / (c rho s_cK(t/b)) along one radial
    geodesic, rho = a where s' >= 0 and b where s' < 0, plus the
    intermediate deformed bound phi' s'_cK(phi) / (c s_cK(phi))."""
    p = params
    cK = p.c * p.K
    if weight.t.size != td.t.size or float(
            np.max(np.abs(weight.t - td.t))) > 1e-12 * max(1.0, td.t[-1]):
        raise ValidationError(
            "weight profile and transverse data use different time grids")
    tc = first_conjugate_point(td)
    tmax = td.t[-1] if tc is None else min(td.t[-1], tc * (1.0 - 1e-6))
    win = (td.t >= TAU_MIN_FRAC * tmax) & (td.t <= tmax)
    if cK > 0.0:
        win &= td.t / p.b < math.pi / math.sqrt(cK) * (1.0 - 1e-12)
    tk = td.t[win]
    if tk.size < 4:
        raise ValidationError("no usable window below the conjugate point")

    delta = np.trace(td.B[win], axis1=1, axis2=2) - weight.dpsi[win]

    s, sp = comparison_s(cK, tk / p.b)
    rho = np.where(sp >= 0.0, p.a, p.b)
    bound = sp / (p.c * rho * s)
    band = np.abs(sp) <= 1e-6
    if np.any(band):
        # at the s' sign change the rho branches meet; take the laxer one
        bound[band] = np.maximum(sp[band] / (p.c * p.a * s[band]),
                                 sp[band] / (p.c * p.b * s[band]))
    resid = (delta - bound) / np.maximum(1.0, np.abs(bound))

    if weight.eps == p.eps:
        ph = weight.phi[win]
    else:
        ph = reparametrize(weight.path, weight, p.eps)[0][win]
    phip = np.exp((2.0 * (p.eps - 1.0) / p.m) * weight.psi[win])
    mask2 = np.ones(tk.size, dtype=bool)
    if cK > 0.0:
        mask2 = ph < math.pi / math.sqrt(cK) * (1.0 - 1e-12)
    both = resid.copy()
    deformed_max = None
    if np.any(mask2):
        s2, sp2 = comparison_s(cK, ph[mask2])
        bound2 = phip[mask2] * sp2 / (p.c * s2)
        resid2 = (delta[mask2] - bound2) / np.maximum(1.0, np.abs(bound2))
        both[mask2] = np.maximum(resid[mask2], resid2)
        deformed_max = float(np.max(resid2))

    diag = {"deformed_max": deformed_max,
            "direct_max": float(np.max(resid)),
            "conjugate_t": tc}
    return CheckReport.build(
        "laplacian_comparison", scenario, _params_dict(p), tk, both,
        float(np.max(both)), tol, diag)


def _chunked_matrix(fn, L, n, X, V, chunk=32768):
    T = X.shape[0]
    out = np.empty((T, n, n))
    for s in range(0, T, chunk):
        out[s:s + chunk] = fn(L, n, X[s:s + chunk], V[s:s + chunk])
    return out


def _indicatrix_grid(space, x0, n_dirs, rng_seed=0):
    """Directions on the indicatrix of x0 with quadrature weights for the
    induced measure.

    The indicatrix is parametrized over the Euclidean unit sphere,
    v(u) = u/F(u); the weight of each node is the quadrature weight times
    sqrt(det) of the metric g_v pulled back through that parametrization.
    Product grids for dim <= 3 (Gauss-Legendre in the polar cosine,
    periodic trapezoid in the azimuth); scrambled-Sobol spherical Monte
    Carlo above. Returns (V0, w, w_sub) where w_sub is the weight vector
    of an embedded coarser rule (zeros off its nodes) whose disagreement
    with w feeds the error estimate.
    """
    n = space.dim
    L = space.lagrangian
    if n == 2:
        P = int(n_dirs or 48)
        P += P % 2
        theta = 2.0 * math.pi * np.arange(P) / P
        U = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        dUs = [np.stack([-np.sin(theta), np.cos(theta)], axis=1)]
        qw = np.full(P, 2.0 * math.pi / P)
        sub = np.zeros(P)
        sub[::2] = 2.0 * 2.0 * math.pi / P
        qw_sub = sub
    elif n == 3:
        # two independent (u = cos(theta), phi) product grids: the main
        # rule plus a coarser companion whose nodes ride along with zero
        # main weight, so one bundle integration serves both
        pu = int(n_dirs or 12)
        pphi = pu + pu % 2
        pu2 = max(5, (2 * pu) // 3)
        pphi2 = max(6, pphi // 2 + (pphi // 2) % 2)
        Ub, dUub, dUpb, qwb = [], [], [], []
        for ku, kp in ((pu, pphi), (pu2, pphi2)):
            uq, wu = np.polynomial.legendre.leggauss(ku)
            phi = 2.0 * math.pi * np.arange(kp) / kp
            UQ, PH = np.meshgrid(uq, phi, indexing="ij")
            u1 = UQ.ravel()
            su = np.sqrt(1.0 - u1 ** 2)
            cp, sp_ = np.cos(PH).ravel(), np.sin(PH).ravel()
            Ub.append(np.stack([su * cp, su * sp_, u1], axis=1))
            # the (u, phi) chart has area element du dphi exactly
            dUub.append(np.stack([-u1 * cp / su, -u1 * sp_ / su,
                                  np.ones_like(su)], axis=1))
            dUpb.append(np.stack([-su * sp_, su * cp,
                                  np.zeros_like(su)], axis=1))
            qwb.append(np.outer(wu, np.full(kp, 2.0 * math.pi / kp)).ravel())
        U = np.vstack(Ub)
        dUs = [np.vstack(dUub), np.vstack(dUpb)]
        qw = np.concatenate([qwb[0], np.zeros_like(qwb[1])])
        qw_sub = np.concatenate([np.zeros_like(qwb[0]), qwb[1]])
    else:
        from scipy.special import ndtri
        from scipy.stats import qmc

        P = int(n_dirs or 512)
        draws = qmc.Sobol(d=n, scramble=True, seed=rng_seed).random(P)
        z = ndtri(np.clip(draws, 1e-12, 1.0 - 1e-12))
        U = z / np.linalg.norm(z, axis=1, keepdims=True)
        dUs = None
        area = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
        qw = np.full(P, area / P)
        qw_sub = np.zeros(P)
        qw_sub[: P // 2] = area / (P // 2)

    P = U.shape[0]
    X0 = np.tile(np.asarray(x0, dtype=float), (P, 1))
    g = grid_metric(L, n, X0, U)
    F = np.sqrt(2.0 * eng_l_batch(L, X0, U))
    ell = np.einsum("pab,pb->pa", g, U)
    V0 = U / F[:, None]

    if dUs is None:
        # Monte Carlo: orthonormal tangent frames per direction
        dets = np.empty(P)
        for pidx in range(P):
            u = U[pidx]
            Qm, _ = np.linalg.qr(
                np.hstack([u[:, None], np.eye(n)[:, : n - 1]]))
            Tb = Qm[:, 1:].T
            dV = (Tb - np.outer((Tb @ ell[pidx]) / (F[pidx] ** 2), u)) \
                / F[pidx]
            M = dV @ g[pidx] @ dV.T
            dets[pidx] = abs(np.linalg.det(M))
        dens = np.sqrt(dets)
    else:
        k = len(dUs)
        dV = []
        for dU in dUs:
            dF = np.einsum("pa,pa->p", ell, dU) / F
            dV.append(dU / F[:, None] - U * (dF / F ** 2)[:, None])
        G = np.empty((P, k, k))
        for i in range(k):
            for j in range(k):
                G[:, i, j] = np.einsum("pa,pab,pb->p", dV[i], g, dV[j])
        if k == 1:
            dens = np.sqrt(np.abs(G[:, 0, 0]))
        else:
            dens = np.sqrt(np.abs(np.linalg.det(G)))

    w = qw * dens
    w_sub = qw_sub * dens
    live = (w > 0.0) | (w_sub > 0.0)
    return V0[live], w[live], w_sub[live]


def _bundle_det_jacobi(space, bundle, n_t):
    """det Y on the output grid for every geodesic of a bundle.

    Same frame + Jacobi RK4 cascade as transverse_data, vectorized over
    the path axis; only det Y survives (volume integrands need nothing
    else).
    """
    P, Tq, n = bundle.X.shape
    m = n - 1
    L = space.lagrangian
    Xf = bundle.X.reshape(P * Tq, n)
    Vf = bundle.V.reshape(P * Tq, n)
    g = _chunked_matrix(grid_metric, L, n, Xf, Vf).reshape(P, Tq, n, n)
    R = _chunked_matrix(grid_curvature, L, n, Xf, Vf).reshape(P, Tq, n, n)
    W = _chunked_matrix(grid_chern_hv, L, n, Xf, Vf).reshape(P, Tq, n, n)
    gR = np.einsum("ptab,ptbc->ptac", g, R)

    E = np.stack([transverse_frame_at(g[p, 0], bundle.V[p, 0])
                  for p in range(P)])
    Y = np.zeros((P, m, m))
    Z = np.tile(np.eye(m), (P, 1, 1))
    detY = np.empty((P, n_t + 1))
    detY[:, 0] = 0.0

    def deriv(idx, Ec, Yc, Zc):
        rho = np.einsum("pia,pab,pjb->pij", Ec, gR[:, idx], Ec)
        dE = -np.einsum("pia,pba->pib", Ec, W[:, idx])
        return dE, Zc, -np.einsum("pik,pkj->pij", Yc, rho)

    h = float(bundle.t[-1]) / (2 * n_t)
    for s in range(2 * n_t):
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
            detY[:, i1 // 4] = np.linalg.det(Y)

    gram = np.einsum("pia,pab,pjb->pij", E, g[:, -1], E) - np.eye(m)
    drift = float(np.max(np.abs(gram)))
    if drift > 1e-4:
        raise NumericalError(
            "parallel frames drifted from orthonormality by %g" % drift)
    return detY


def ball_volume(space, origin, r, density=None, n_dirs=None, n_steps=None,
                tol=DEFAULT_TOL, rng_seed=0):
    """Measure of the forward ball B+(origin, r) by polar integration.

    Inner integral per direction: e^{-psi} sqrt(det A) dt up to r;
    outer: the induced indicatrix measure. r must stay below every
    direction's first conjugate time and the chart horizon.
    """
    if space.signature != "positive":
        raise ValidationError("forward-ball volumes are positive-definite "
                              "machinery")
    xl = check_point(space, origin)
    r = float(r)
    if r <= 0.0:
        raise ValidationError("ball radius must be positive")
    if density is None:
        density = space.natural_density
    if density is None:
        raise ValidationError(
            "space %s declares no natural density; supply one explicitly"
            % space.name)
    n = space.dim
    n_t = int(n_steps or (96 if n == 2 else 64))
    n_t += (-n_t) % 4

    V0, w, w_sub = _indicatrix_grid(space, xl, n_dirs, rng_seed=rng_seed)
    P = V0.shape[0]
    X0 = np.tile(xl, (P, 1))
    try:
        bundle = integrate_bundle(space, X0, V0, r, n_steps=4 * n_t)
    except NumericalError as exc:
        # coordinates of a ray blew up before r: the radius pokes past
        # the chart's certified normal range
        raise ValidationError(
            "radius %g is outside the normal range covered by this chart "
            "(%s)" % (r, exc)) from exc
    if np.any(bundle.valid_len < 4 * n_t + 1):
        raise ValidationError(
            "radius %g leaves the chart along %d directions"
            % (r, int(np.sum(bundle.valid_len < 4 * n_t + 1))))

    detY = _bundle_det_jacobi(space, bundle, n_t)
    if np.any(detY[:, 1:] <= 0.0):
        raise ValidationError(
            "radius %g reaches a conjugate point in some direction" % r)

    t_out = bundle.t[::4]
    Xo = bundle.X[:, ::4, :].reshape(P * (n_t + 1), n)
    Vo = bundle.V[:, ::4, :].reshape(P * (n_t + 1), n)
    detg = np.linalg.det(_chunked_matrix(grid_metric, space.lagrangian, n,
                                         Xo, Vo))
    if np.any(detg <= 0.0):
        raise NumericalError("fundamental tensor determinant lost its sign")
    xb = [Xo[:, i] for i in range(n)]
    rho = np.broadcast_to(np.asarray(d.real(density(xb)), dtype=float),
                          (P * (n_t + 1),))
    if np.any(rho <= 0.0):
        raise ValidationError("density must be positive on the ball")
    psi = (0.5 * np.log(detg) - np.log(rho)).reshape(P, n_t + 1)

    f = np.exp(-psi) * detY
    inner = simpson(f, x=t_out, axis=1)
    inner_half = simpson(f[:, ::2], x=t_out[::2], axis=1)
    vol = float(w @ inner)
    est = float(w @ np.abs(inner - inner_half))
    est += abs(vol - float(w_sub @ inner))
    if est > tol:
        raise NumericalError(
            "quadrature error estimate %g exceeds the requested %g; raise "
            "n_dirs / n_steps" % (est, tol))
    return vol


def check_bishop_gromov(space, params, origin, r, R, density=None,
                        tol=DEFAULT_TOL, n_dirs=None, n_steps=None,
                        scenario="", ball_tol=DEFAULT_TOL):
    """m(B+(x,R))/m(B+(x,r)) against the s_cK^{1/c} profile ratio."""
    p = params
    if not 0.0 < r < R:
        raise ValidationError("need 0 < r < R, got r=%g R=%g" % (r, R))
    cK = p.c * p.K
    if cK > 0.0 and R > p.b * math.pi / math.sqrt(cK) + 1e-12:
        raise ValidationError(
            "R=%g exceeds b pi/sqrt(cK)=%g" % (R, p.b * math.pi
                                               / math.sqrt(cK)))
    vol_r = ball_volume(space, origin, r, density=density, n_dirs=n_dirs,
                        n_steps=n_steps, tol=ball_tol)
    vol_R = ball_volume(space, origin, R, density=density, n_dirs=n_dirs,
                        n_steps=n_steps, tol=ball_tol)
    ratio = vol_R / vol_r

    upper = R / p.a
    if cK > 0.0:
        upper = min(upper, math.pi / math.sqrt(cK))
    prof = lambda s: comparison_s(cK, s)[0] ** (1.0 / p.c)
    num = quad(prof, 0.0, upper, limit=200)[0]
    den = quad(prof, 0.0, r / p.b, limit=200)[0]
    bound = (p.b / p.a) * num / den

    resid = (ratio - bound) / max(1.0, bound)
    diag = {"ratio": ratio, "bound": bound, "vol_r": vol_r, "vol_R": vol_R}
    return CheckReport.build(
        "bishop_gromov", scenario, _params_dict(p), [float(R)], [resid],
        resid, tol, diag)


def validate_hypotheses(space, params, density=None, samples=120,
                        rng_seed=0):
    """Sample the two standing hypotheses; raise HypothesisRejection.

    Checks Ric_N(v) >= K F^2(v) e^{4(eps-1)psi(v)/m} and
    a <= e^{-2(eps-1)psi(v)/m} <= b over random admissible samples.
    Returns the observed margins for report metadata.
    """
    p = params
    if density is None:
        density = space.natural_density
    if density is None:
        raise ValidationError(
            "space %s declares no natural density; supply one explicitly"
            % space.name)
    rng = np.random.default_rng(rng_seed)
    X, V = sample_admissible(space, rng, samples)
    wfun = density_weight_function(space, density)

    worst_margin = math.inf
    wmin, wmax = math.inf, -math.inf
    for i in range(samples):
        xl = [float(c) for c in X[i]]
        vl = [float(c) for c in V[i]]
        ric_n = weighted_ricci(space, xl, vl, p.N, density=density)
        f2 = 2.0 * float(d.real(space.lagrangian(xl, vl)))
        if space.signature == "lorentzian":
            f2 = -f2
        psi = float(d.real(wfun(xl, vl)))
        deform = math.exp(4.0 * (p.eps - 1.0) * psi / p.m)
        floor = p.K * f2 * deform
        margin = (ric_n - floor) / max(1.0, abs(floor))
        worst_margin = min(worst_margin, margin)
        if margin < -1e-8:
            raise HypothesisRejection(
                "curvature hypothesis fails at sample %d: Ric_N = %r < "
                "%r = K F^2 e^{4(eps-1)psi/m}" % (i, ric_n, floor))
        wf = math.exp(-2.0 * (p.eps - 1.0) * psi / p.m)
        wmin, wmax = min(wmin, wf), max(wmax, wf)
        if wf < p.a * (1.0 - 1e-9) or wf > p.b * (1.0 + 1e-9):
            raise HypothesisRejection(
                "weight bound fails at sample %d: e^{-2(eps-1)psi/m} = %r "
                "outside [a, b] = [%r, %r]" % (i, wf, p.a, p.b))
    return {"ric_margin_min": worst_margin,
            "weight_factor_range": [wmin, wmax], "samples": samples}
