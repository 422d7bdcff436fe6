"""Command line front end.

  finslercomp run <scenario.json> [--out DIR] [--tol X] [--seed S]
  finslercomp zoo list
  finslercomp check <name> --space <zoo> [--<param> value ...] [options]
  finslercomp legendre --space <zoo> [--<param> value ...] --angle A | --v C

Exit codes follow the runner contract: 0 all checks passed, 1 a bound
was violated, 2 the scenario was rejected (hypothesis sampling or an
unloadable file), 3 a check aborted numerically.
"""

import argparse
import inspect
import json
import sys

from .errors import FinslerError
from .runner import report_json, run_scenario
from .scenario import CHECK_NAMES, load_scenario, scenario_from_dict
from .zoo import ZOO


def _parse_value(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _collect_params(extras):
    """Turn leftover ["--k", "4", ...] tokens into a zoo params dict."""
    params = {}
    it = iter(extras)
    for tok in it:
        if not tok.startswith("--") or len(tok) <= 2:
            raise FinslerError("unexpected argument %r; space parameters "
                               "are passed as --name value" % tok)
        key = tok[2:]
        try:
            val = next(it)
        except StopIteration:
            raise FinslerError("space parameter --%s is missing a value"
                               % key)
        params[key] = _parse_value(val)
    return params


def _csv_floats(text, what):
    try:
        return [float(c) for c in text.split(",")]
    except ValueError:
        raise FinslerError("%s: expected comma-separated numbers, got %r"
                           % (what, text))


def _cmd_run(args):
    sc = load_scenario(args.scenario, tol=args.tol, seed=args.seed)
    code, report = run_scenario(sc, out_dir=args.out)
    if args.out is None:
        print(report_json(report))
    else:
        print("%s/%s.report.json" % (args.out.rstrip("/"), sc.id))
    return code


def _cmd_zoo(args):
    for name in sorted(ZOO):
        fn, _ = ZOO[name]
        sig = inspect.signature(fn)
        pieces = ["%s=%r" % (p.name, p.default)
                  for p in sig.parameters.values()]
        print("%-28s %s" % (name, ", ".join(pieces)))
    return 0


def _scenario_for_check(args, extras):
    space = {"zoo": args.space}
    params = _collect_params(extras)
    if params:
        space["params"] = params

    entry = {"name": args.check}
    if args.tol is not None:
        entry["tol"] = args.tol
    if args.check == "conjugate":
        entry["expect"] = args.expect
    if args.check == "hessian":
        if args.f is None:
            raise FinslerError("hessian needs --f <expression json>")
        try:
            entry["f"] = json.loads(args.f)
        except json.JSONDecodeError as exc:
            raise FinslerError("--f is not valid JSON: %s" % exc)
    if args.check == "bishop_gromov":
        if args.r is None or args.R is None:
            raise FinslerError("bishop_gromov needs --r and --R")
        entry["r"], entry["R"] = args.r, args.R
        if args.sector_axis is not None:
            entry["sector"] = {
                "axis": _csv_floats(args.sector_axis, "--sector-axis"),
                "angle": args.sector_angle,
                "cut": args.sector_cut,
            }
    if args.check == "monotonicity" and args.samples is not None:
        entry["samples"] = args.samples

    raw = {
        "id": "check-%s-%s" % (args.check, args.space),
        "space": space,
        "params": {"N": _parse_value(args.N), "eps": args.eps,
                   "K": args.K, "a": args.a, "b": args.b},
        "bundle": {"origin": _csv_floats(args.origin, "--origin")
                   if args.origin else None,
                   "directions": {"count": args.count},
                   "horizon": args.t_end},
        "checks": [entry],
        "validate": not args.no_validate,
    }
    if args.weight == "lebesgue":
        raw["weight"] = {"lebesgue": True}
    elif args.weight is not None:
        if not args.weight.startswith("gaussian:"):
            raise FinslerError("--weight takes 'lebesgue' or 'gaussian:LAM'")
        raw["weight"] = {"gaussian": float(args.weight.split(":", 1)[1])}
    return raw


def _cmd_check(args, extras):
    raw = _scenario_for_check(args, extras)
    if raw["bundle"]["origin"] is None:
        # default origin: chart center
        from .zoo import build_zoo
        dim = build_zoo(args.space, raw["space"].get("params")).dim
        raw["bundle"]["origin"] = [0.0] * dim
    sc = scenario_from_dict(raw, seed=args.seed)
    code, report = run_scenario(sc, out_dir=args.out)
    if args.out is None:
        print(report_json(report))
    else:
        print("%s/%s.report.json" % (args.out.rstrip("/"), sc.id))
    return code


def _cmd_legendre(args, extras):
    from . import lorentz as lz
    from .zoo import build_zoo

    space = build_zoo(args.space, _collect_params(extras) or None)
    x = (_csv_floats(args.x, "--x") if args.x else [0.0] * space.dim)
    if args.v is not None:
        v = _csv_floats(args.v, "--v")
    elif args.angle is not None:
        if space.dim != 2:
            raise FinslerError("--angle builds a 2-dim direction; %s has "
                               "dim %d, pass --v instead"
                               % (space.name, space.dim))
        import math
        v = [math.cos(args.angle), math.sin(args.angle)]
    else:
        raise FinslerError("pass a direction: --angle A (dim 2) or "
                           "--v c0,c1,...")

    om = lz.legendre(space, x, v)
    back = lz.legendre_inverse(space, x, om)
    out = {
        "space": space.name,
        "x": x,
        "v": v,
        "classification": str(lz.classify(space, x, v)),
        "omega": [float(c) for c in om.coords],
        "roundtrip": [float(c) for c in back.coords],
        "roundtrip_error": max(abs(a - b)
                               for a, b in zip(back.coords, v)),
    }
    print(json.dumps(out, indent=1, sort_keys=True))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="finslercomp",
        description="Comparison-theorem checks for weighted Finsler "
                    "manifolds and spacetimes.")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=None,
                       help="directory for the JSON report and CSV profiles")
    p_run.add_argument("--tol", type=float, default=None,
                       help="default tolerance for checks without one")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")

    p_zoo = sub.add_parser("zoo", help="model spaces")
    p_zoo.add_argument("action", choices=["list"])

    p_chk = sub.add_parser(
        "check", help="one-off check on a zoo space; unknown --flags "
                      "become space parameters")
    p_chk.add_argument("check", choices=list(CHECK_NAMES))
    p_chk.add_argument("--space", required=True)
    p_chk.add_argument("--N", default="inf")
    p_chk.add_argument("--eps", type=float, default=1.0)
    p_chk.add_argument("--K", type=float, default=0.0)
    p_chk.add_argument("--a", type=float, default=1.0)
    p_chk.add_argument("--b", type=float, default=1.0)
    p_chk.add_argument("--t-end", type=float, default=2.0, dest="t_end")
    p_chk.add_argument("--origin", default=None,
                       help="comma-separated chart point (default: center)")
    p_chk.add_argument("--count", type=int, default=4,
                       help="number of sampled directions")
    p_chk.add_argument("--seed", type=int, default=None)
    p_chk.add_argument("--tol", type=float, default=None)
    p_chk.add_argument("--out", default=None)
    p_chk.add_argument("--weight", default=None,
                       help="'lebesgue' or 'gaussian:LAM' "
                            "(default: natural density)")
    p_chk.add_argument("--no-validate", action="store_true",
                       help="skip the sampled hypothesis gate")
    p_chk.add_argument("--expect", type=float, default=None,
                       help="conjugate: expected first conjugate time")
    p_chk.add_argument("--r", type=float, default=None)
    p_chk.add_argument("--R", type=float, default=None)
    p_chk.add_argument("--sector-axis", default=None, dest="sector_axis")
    p_chk.add_argument("--sector-angle", type=float, default=0.3,
                       dest="sector_angle")
    p_chk.add_argument("--sector-cut", type=float, default=1.0,
                       dest="sector_cut")
    p_chk.add_argument("--f", default=None,
                       help="hessian: temporal function, expression JSON")
    p_chk.add_argument("--samples", type=int, default=None,
                       help="monotonicity: sample count")

    p_leg = sub.add_parser(
        "legendre", help="Legendre transform of one vector; unknown "
                         "--flags become space parameters")
    p_leg.add_argument("--space", required=True)
    p_leg.add_argument("--angle", type=float, default=None,
                       help="direction (cos A, sin A) on a dim-2 chart")
    p_leg.add_argument("--v", default=None,
                       help="comma-separated direction components")
    p_leg.add_argument("--x", default=None,
                       help="comma-separated base point (default: center)")

    return ap


def main(argv=None):
    ap = build_parser()
    args, extras = ap.parse_known_args(argv)
    try:
        if args.command == "run":
            if extras:
                ap.error("unrecognized arguments: %s" % " ".join(extras))
            return _cmd_run(args)
        if args.command == "zoo":
            if extras:
                ap.error("unrecognized arguments: %s" % " ".join(extras))
            return _cmd_zoo(args)
        if args.command == "check":
            return _cmd_check(args, extras)
        return _cmd_legendre(args, extras)
    except FinslerError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
