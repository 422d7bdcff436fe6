"""Model-space catalogue with closed-form reference behavior.

Each builder returns a ChartedSpace whose Lagrangian (L = F^2/2 in the
positive case, the defining 2-homogeneous Lagrangian in the lorentzian
case) is written against the dual-safe math shim, so the same code path
serves exact differentiation and batched float/array evaluation.
"""

import math

from . import _dual as d
from .core import ChartedSpace
from .errors import ValidationError


def _sq(vals):
    s = 0.0
    for c in vals:
        s = s + c * c
    return s


def euclidean(n=3):
    n = int(n)
    return ChartedSpace(
        n, "positive",
        lambda x, v: 0.5 * _sq(v),
        name="euclidean",
        natural_density=lambda x: 1.0,
        params={"n": n},
    )


def sphere(n=2):
    """Round sphere of curvature 1 in a stereographic chart.

    The chart covers everything but one point; the image of the antipode
    of x is -x/|x|^2, so geodesics from x != 0 stay in a bounded region.
    """
    n = int(n)

    def lag(x, v):
        f = 1.0 + _sq(x)
        return 2.0 * _sq(v) / (f * f)

    return ChartedSpace(
        n, "positive", lag,
        name="sphere",
        natural_density=lambda x: dpow_density(2.0 / (1.0 + _sq(x)), n),
        sample_box=[(-0.8, 0.8)] * n,
        params={"n": n},
    )


def dpow_density(base, n):
    out = base
    for _ in range(n - 1):
        out = out * base
    return out


def poincare_ball(n=2):
    """Hyperbolic space of curvature -1 on the unit ball."""
    n = int(n)

    def lag(x, v):
        f = 1.0 - _sq(x)
        return 2.0 * _sq(v) / (f * f)

    return ChartedSpace(
        n, "positive", lag,
        name="poincare_ball",
        chart_domain=lambda x: _sq_real(x) < 1.0,
        chart_margin=lambda x: 1.0 - math.sqrt(_sq_real(x)),
        natural_density=lambda x: dpow_density(2.0 / (1.0 - _sq(x)), n),
        sample_box=[(-0.45, 0.45)] * n,
        params={"n": n},
    )


def _sq_real(x):
    return sum(float(d.real(c)) ** 2 for c in x)


def randers(n=3, b=0.3):
    """Flat Randers space F = |v| + b v^1 (norm translation-invariant).

    Needs |b| < 1 for positivity. There is no canonical volume measure,
    so natural_density stays unset and unweighted volume operations fail
    with a validation error unless a density is supplied.
    """
    n = int(n)
    b = float(b)
    if not abs(b) < 1.0:
        raise ValidationError("randers drift must satisfy |b| < 1, got %g" % b)

    def lag(x, v):
        f = d.sqrt(_sq(v)) + b * v[0]
        return 0.5 * f * f

    return ChartedSpace(n, "positive", lag, name="randers",
                        params={"n": n, "b": b})


def gaussian_weighted_euclidean(n=3, lam=1.0):
    """Euclidean space with the measure exp(-lam |x|^2 / 2) dx."""
    n = int(n)
    lam = float(lam)
    return ChartedSpace(
        n, "positive",
        lambda x, v: 0.5 * _sq(v),
        name="gaussian_weighted_euclidean",
        weight=lambda x: 0.5 * lam * _sq(x),
        natural_density=lambda x: d.exp(-0.5 * lam * _sq(x)),
        params={"n": n, "lam": lam},
    )


def minkowski(dim=4):
    dim = int(dim)

    def lag(x, v):
        return 0.5 * (-(v[0] * v[0]) + _sq(v[1:]))

    return ChartedSpace(
        dim, "lorentzian", lag,
        name="minkowski",
        natural_density=lambda x: 1.0,
        params={"dim": dim},
    )


def weighted_minkowski(dim=4, lam=0.5):
    """Minkowski spacetime with the measure exp(-lam |x|^2 / 2) dx."""
    dim = int(dim)
    lam = float(lam)

    def lag(x, v):
        return 0.5 * (-(v[0] * v[0]) + _sq(v[1:]))

    return ChartedSpace(
        dim, "lorentzian", lag,
        name="weighted_minkowski",
        weight=lambda x: 0.5 * lam * _sq(x),
        natural_density=lambda x: d.exp(-0.5 * lam * _sq(x)),
        params={"dim": dim, "lam": lam},
    )


_FLRW_PROFILES = {
    "cos": (d.cos, lambda t: -d.sin(t), lambda t: -d.cos(t)),
    "cosh": (d.cosh, d.sinh, d.cosh),
    "exp": (d.exp, d.exp, d.exp),
}


def flrw(dim=4, profile="cos"):
    """Warped product -dt^2 + f(t)^2 (flat spatial metric), f the profile.

    The cos profile degenerates at |x^0| = pi/2, so its chart stops there.
    """
    dim = int(dim)
    if profile not in _FLRW_PROFILES:
        raise ValidationError("flrw profile must be one of %s"
                              % sorted(_FLRW_PROFILES))
    f, _, _ = _FLRW_PROFILES[profile]
    nsp = dim - 1

    def lag(x, v):
        w = f(x[0])
        return 0.5 * (-(v[0] * v[0]) + w * w * _sq(v[1:]))

    if profile == "cos":
        half_pi = 0.5 * math.pi
        chart = lambda x: abs(float(d.real(x[0]))) < half_pi
        margin = lambda x: half_pi - abs(float(d.real(x[0])))
    else:
        chart = None
        margin = None

    return ChartedSpace(
        dim, "lorentzian", lag,
        name="flrw_%s" % profile,
        chart_domain=chart,
        chart_margin=margin,
        natural_density=lambda x: dpow_density(f(x[0]), nsp),
        sample_box=([(-1.2, 1.2)] + [(-0.8, 0.8)] * nsp)
        if profile == "cos" else [(-0.8, 0.8)] * dim,
        params={"dim": dim, "profile": profile},
    )


def beem(k=4):
    """Flat 2d Finsler spacetime with a quartic non-quadratic Lagrangian.

    2L = (p^4 - 6 p^2 q^2 + q^4) / (p^2 + q^2) = r^2 cos(4 theta) in polar
    velocity coordinates, so the future timelike cone is theta in
    (pi/8, 3 pi/8) around the axis (1, 1)/sqrt(2).
    """
    if int(k) != 4:
        raise ValidationError("only the quartic member (k=4) is provided")

    def lag(x, v):
        p, q = v[0], v[1]
        p2 = p * p
        q2 = q * q
        return 0.5 * (p2 * p2 - 6.0 * p2 * q2 + q2 * q2) / (p2 + q2)

    s = 1.0 / math.sqrt(2.0)
    return ChartedSpace(
        2, "lorentzian", lag,
        name="beem",
        orientation=lambda x: [s, s],
        natural_density=lambda x: 1.0,
        cone_margin=1e-4,
        params={"k": 4},
    )


ZOO = {
    "euclidean": (euclidean, ("n",)),
    "sphere": (sphere, ("n",)),
    "poincare_ball": (poincare_ball, ("n",)),
    "randers": (randers, ("n", "b")),
    "gaussian_weighted_euclidean": (gaussian_weighted_euclidean, ("n", "lam")),
    "minkowski": (minkowski, ("dim",)),
    "weighted_minkowski": (weighted_minkowski, ("dim", "lam")),
    "flrw": (flrw, ("dim", "profile")),
    "beem": (beem, ("k",)),
}


def build_zoo(name, params=None):
    """Instantiate a catalogue space by name with keyword parameters."""
    if name not in ZOO:
        raise ValidationError(
            "unknown model space %r; available: %s" % (name, ", ".join(sorted(ZOO))))
    builder, allowed = ZOO[name]
    params = dict(params or {})
    extra = set(params) - set(allowed)
    if extra:
        raise ValidationError(
            "unknown parameters %s for %s; accepted: %s"
            % (sorted(extra), name, list(allowed)))
    return builder(**params)
