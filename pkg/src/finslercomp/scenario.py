"""Scenario files: one JSON document names a space, a weight, comparison
parameters, a geodesic bundle, and the checks to run on it.

Schema (all unknown top-level keys are rejected):

  id        string, used in reports
  space     {"zoo": name, "params": {...}} or a custom chart
            {"dim": n, "signature": "positive"|"lorentzian",
             "lagrangian": <expression>, "orientation"?: [..],
             "sample_box"?: [[lo, hi], ..], "name"?: str}
  weight    null (natural density) | {"lebesgue": true}
            | {"gaussian": lam}  (density exp(-lam |x|^2 / 2))
            | {"expression": <expression in x0..>}  (the density rho)
  params    {"N": number | "inf" | "-inf", "eps": e, "K": k,
             "a"?: 1.0, "b"?: 1.0}
  bundle    {"origin": [..], "directions": [[..], ..] | {"count": k,
             "seed"?: s}, "horizon": t_end}
  checks    list of names or {"name": .., "tol"?: ..} objects; per-check
            options:
              conjugate      {"expect": t | null}, the first conjugate
                             parameter to confirm (null: none expected)
              bishop_gromov  {"r": .., "R": ..}; lorentzian charts also
                             take {"sector": {"axis": [..], "angle": a,
                             "cut": T | <expression in v0..>}} with
                             0 < r < R <= 1 as cut fractions
              hessian        {"f": <expression in x0..>, "point"?: [..]}
              monotonicity   {"samples"?: k, "N_list"?: [..]}
              legendre       {"count"?: k}
            raychaudhuri, riccati, legendre and hessian need a lorentzian
            chart.  A check without "tol" uses the runner's default for
            that check.
  validate  bool, default true: sample the curvature and weight-bound
            hypotheses before any check
  seed      int, default 0

Expressions use the JSON grammar of finslercomp.expressions.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _dual as d
from .core import ChartedSpace, check_admissible, finsler_norm
from .errors import ValidationError
from .expressions import parse_expression
from .weighted import comparison_params
from .zoo import build_zoo

CHECK_NAMES = ("structure", "matrix_lemma", "conjugate", "bishop",
               "bonnet_myers", "laplacian", "bishop_gromov",
               "raychaudhuri", "riccati", "monotonicity", "legendre",
               "hessian")

_TOP_KEYS = {"id", "space", "weight", "params", "bundle", "checks",
             "validate", "seed"}


@dataclass
class Scenario:
    """A validated scenario, ready for the runner."""

    id: str
    space: ChartedSpace
    params: object
    density: object
    origin: list
    seeds: list
    horizon: float
    checks: list
    validate: bool
    seed: int
    raw: dict = field(default_factory=dict, repr=False)


def _fail(fieldname, msg):
    raise ValidationError("scenario field %r: %s" % (fieldname, msg))


def _require(mapping, key, fieldname):
    if key not in mapping:
        _fail(fieldname, "missing key %r" % key)
    return mapping[key]


def _number_list(obj, n, fieldname):
    try:
        out = [float(c) for c in obj]
    except (TypeError, ValueError):
        _fail(fieldname, "expected a list of %d numbers, got %r" % (n, obj))
    if len(out) != n:
        _fail(fieldname, "expected length %d, got %d" % (n, len(out)))
    return out


def _check_homogeneity(lag, dim, signature, box, fieldname):
    # 2-homogeneity in v is what every derived object assumes
    rng = np.random.default_rng(1234)
    for _ in range(20):
        x = [float(lo + (hi - lo) * rng.random()) for lo, hi in box]
        v = list(rng.standard_normal(dim))
        if signature == "lorentzian":
            v[0] = 1.0 + abs(v[0]) + float(np.linalg.norm(v[1:]))
        try:
            l1 = float(d.real(lag(x, v)))
            l2 = float(d.real(lag(x, [2.0 * c for c in v])))
        except Exception as exc:
            _fail(fieldname, "lagrangian failed to evaluate: %s" % exc)
        if abs(l2 - 4.0 * l1) > 1e-8 * max(1.0, abs(l1)):
            _fail(fieldname,
                  "lagrangian is not 2-homogeneous: L(x, 2v) = %r but "
                  "4 L(x, v) = %r at x=%s v=%s" % (l2, 4.0 * l1, x, v))


def _build_space(spec):
    if not isinstance(spec, dict):
        _fail("space", "expected an object, got %r" % (spec,))
    if "zoo" in spec:
        extra = set(spec) - {"zoo", "params"}
        if extra:
            _fail("space", "unknown keys %s next to 'zoo'" % sorted(extra))
        return build_zoo(spec["zoo"], spec.get("params"))
    for key in ("dim", "signature", "lagrangian"):
        _require(spec, key, "space")
    dim = int(spec["dim"])
    signature = spec["signature"]
    lag = parse_expression(spec["lagrangian"], dim, slots=("x", "v"))
    box = spec.get("sample_box")
    if box is not None:
        box = [(float(lo), float(hi)) for lo, hi in box]
    orientation = spec.get("orientation")
    if orientation is not None:
        axis = _number_list(orientation, dim, "space.orientation")
        orientation = lambda x: list(axis)
    space = ChartedSpace(dim, signature, lag,
                         name=str(spec.get("name", "custom")),
                         orientation=orientation, sample_box=box)
    _check_homogeneity(lag, dim, signature, space.sample_box,
                       "space.lagrangian")
    return space


def _build_density(spec, space):
    if spec is None:
        return None  # operations fall back to the natural density
    if not isinstance(spec, dict):
        _fail("weight", "expected null or an object, got %r" % (spec,))
    if spec.get("lebesgue"):
        return lambda x: 1.0
    if "gaussian" in spec:
        lam = float(spec["gaussian"])
        return lambda x: d.exp(-0.5 * lam * sum(c * c for c in x))
    if "expression" in spec:
        rho = parse_expression(spec["expression"], space.dim, slots=("x",))
        return rho
    _fail("weight", "expected one of 'lebesgue', 'gaussian', 'expression'")


def _build_params(spec, space):
    if not isinstance(spec, dict):
        _fail("params", "expected an object, got %r" % (spec,))
    N = _require(spec, "N", "params")
    if N == "inf":
        N = math.inf
    elif N == "-inf":
        N = -math.inf
    try:
        N = float(N)
    except (TypeError, ValueError):
        _fail("params.N", "expected a number or 'inf', got %r" % (N,))
    eps = float(_require(spec, "eps", "params"))
    K = float(_require(spec, "K", "params"))
    a = float(spec.get("a", 1.0))
    b = float(spec.get("b", 1.0))
    if a > b:
        _fail("params", "need a <= b, got a=%g b=%g" % (a, b))
    return comparison_params(space, N, eps, K, a, b)


def _sample_directions(space, origin, count, seed):
    if space.signature == "lorentzian":
        from .lorentz import _future_directions
        U = _future_directions(space, origin, count=max(count, 16),
                               rng_seed=seed)
        return [list(map(float, row)) for row in U[:count]]
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        w = rng.standard_normal(space.dim)
        nrm = float(np.linalg.norm(w))
        if nrm < 1e-6:
            continue
        v = [float(c / nrm) for c in w]
        F = finsler_norm(space, origin, v)
        out.append([c / F for c in v])
    return out


def _build_bundle(spec, space, default_seed):
    if not isinstance(spec, dict):
        _fail("bundle", "expected an object, got %r" % (spec,))
    origin = _number_list(_require(spec, "origin", "bundle"), space.dim,
                          "bundle.origin")
    horizon = float(_require(spec, "horizon", "bundle"))
    if not horizon > 0.0:
        _fail("bundle.horizon", "must be positive, got %g" % horizon)
    dirs = _require(spec, "directions", "bundle")
    if isinstance(dirs, dict):
        count = int(_require(dirs, "count", "bundle.directions"))
        if count < 1:
            _fail("bundle.directions", "count must be >= 1")
        seed = int(dirs.get("seed", default_seed))
        vecs = _sample_directions(space, origin, count, seed)
    else:
        vecs = [_number_list(row, space.dim,
                             "bundle.directions[%d]" % i)
                for i, row in enumerate(dirs)]
    seeds = []
    for i, v in enumerate(vecs):
        try:
            check_admissible(space, origin, v)
        except Exception as exc:
            _fail("bundle.directions[%d]" % i, str(exc))
        F = finsler_norm(space, origin, v)
        seeds.append((list(origin), [float(c) / F for c in v]))
    return origin, seeds, horizon


_LORENTZ_ONLY = {"raychaudhuri", "riccati", "legendre", "hessian"}

_CHECK_KEYS = {
    "structure": set(),
    "matrix_lemma": set(),
    "conjugate": {"expect"},
    "bishop": set(),
    "bonnet_myers": set(),
    "laplacian": set(),
    "bishop_gromov": {"r", "R", "sector"},
    "raychaudhuri": set(),
    "riccati": set(),
    "monotonicity": {"samples", "N_list"},
    "legendre": {"count"},
    "hessian": {"f", "point"},
}


def _gate_check(entry, i, space, params):
    # reject what cannot run before any geodesic is integrated
    name = entry["name"]
    where = "checks[%d]" % i
    if name in _LORENTZ_ONLY and space.signature != "lorentzian":
        _fail(where, "check %r needs a lorentzian chart, space %r is %s"
              % (name, space.name, space.signature))
    if name == "conjugate":
        if "expect" not in entry:
            _fail(where, "'conjugate' needs an 'expect' key "
                  "(a parameter value, or null for none)")
        if entry["expect"] is not None:
            entry["expect"] = float(entry["expect"])
            if not entry["expect"] > 0.0:
                _fail(where, "'expect' must be positive or null")
    elif name == "hessian":
        if "f" not in entry:
            _fail(where, "'hessian' needs 'f', an expression in x0..")
        entry["_f"] = parse_expression(entry["f"], space.dim, slots=("x",))
        if "point" in entry:
            entry["point"] = _number_list(entry["point"], space.dim,
                                          where + ".point")
    elif name == "monotonicity":
        if "samples" in entry:
            entry["samples"] = int(entry["samples"])
            if entry["samples"] < 1:
                _fail(where, "samples must be >= 1")
        if "N_list" in entry:
            vals = []
            for u in entry["N_list"]:
                if u == "inf":
                    vals.append(math.inf)
                elif u == "-inf":
                    vals.append(-math.inf)
                else:
                    vals.append(float(u))
            entry["N_list"] = vals
    elif name == "legendre":
        if "count" in entry:
            entry["count"] = int(entry["count"])
            if entry["count"] < 1:
                _fail(where, "count must be >= 1")
    elif name == "bishop_gromov":
        for key in ("r", "R"):
            if key not in entry:
                _fail(where, "'bishop_gromov' needs radii 'r' and 'R'")
            entry[key] = float(entry[key])
        if not 0.0 < entry["r"] < entry["R"]:
            _fail(where, "need 0 < r < R, got r=%g R=%g"
                  % (entry["r"], entry["R"]))
        if space.signature == "lorentzian":
            sector = entry.get("sector")
            if not isinstance(sector, dict):
                _fail(where, "'bishop_gromov' on a lorentzian chart needs "
                      "a 'sector' object with axis, angle and cut")
            for key in ("axis", "angle", "cut"):
                if key not in sector:
                    _fail(where + ".sector", "missing key %r" % key)
            sector = dict(sector)
            sector["axis"] = _number_list(sector["axis"], space.dim,
                                          where + ".sector.axis")
            sector["angle"] = float(sector["angle"])
            if not sector["angle"] > 0.0:
                _fail(where + ".sector", "angle must be positive")
            if not isinstance(sector["cut"], (int, float)):
                # direction-dependent cut: covered only at K = 0
                if params.K != 0.0:
                    _fail(where + ".sector", "a cut expression needs "
                          "K = 0, scenario has K = %g" % params.K)
                sector["cut"] = parse_expression(sector["cut"], space.dim,
                                                 slots=("v",))
            else:
                sector["cut"] = float(sector["cut"])
            entry["sector"] = sector
            if not entry["R"] <= 1.0:
                _fail(where, "on a lorentzian chart r and R are cut "
                      "fractions and need R <= 1, got %g" % entry["R"])


def _build_checks(spec, space, params, tol_override):
    if not isinstance(spec, (list, tuple)) or not spec:
        _fail("checks", "expected a non-empty list")
    out = []
    for i, entry in enumerate(spec):
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, dict) or "name" not in entry:
            _fail("checks[%d]" % i, "expected a name or an object with "
                  "'name', got %r" % (entry,))
        entry = dict(entry)
        name = entry["name"]
        if name not in CHECK_NAMES:
            _fail("checks[%d].name" % i,
                  "unknown check %r; available: %s"
                  % (name, ", ".join(CHECK_NAMES)))
        extra = set(entry) - _CHECK_KEYS[name] - {"name", "tol"}
        if extra:
            _fail("checks[%d]" % i, "unknown option %r for check %r"
                  % (sorted(extra)[0], name))
        if "tol" in entry:
            entry["tol"] = float(entry["tol"])
        elif tol_override is not None:
            entry["tol"] = float(tol_override)
        _gate_check(entry, i, space, params)
        out.append(entry)
    return out


def load_scenario(path, tol=None, seed=None):
    """Parse and validate one scenario JSON file."""
    if not os.path.exists(path):
        raise ValidationError("scenario file %s does not exist" % path)
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            "scenario %s: parse error at line %d column %d: %s"
            % (path, exc.lineno, exc.colno, exc.msg))
    return scenario_from_dict(raw, tol=tol, seed=seed, origin_path=path)


def scenario_from_dict(raw, tol=None, seed=None, origin_path="<dict>"):
    if not isinstance(raw, dict):
        raise ValidationError("scenario %s: top level must be an object"
                              % origin_path)
    extra = set(raw) - _TOP_KEYS
    if extra:
        _fail(sorted(extra)[0], "unknown top-level key")
    sid = str(_require(raw, "id", "id"))
    space = _build_space(_require(raw, "space", "space"))
    density = _build_density(raw.get("weight"), space)
    params = _build_params(_require(raw, "params", "params"), space)
    run_seed = int(raw.get("seed", 0) if seed is None else seed)
    origin, seeds, horizon = _build_bundle(
        _require(raw, "bundle", "bundle"), space, run_seed)
    checks = _build_checks(_require(raw, "checks", "checks"), space,
                           params, tol)
    validate = bool(raw.get("validate", True))
    return Scenario(id=sid, space=space, params=params, density=density,
                    origin=origin, seeds=seeds, horizon=horizon,
                    checks=checks, validate=validate, seed=run_seed,
                    raw=raw)
