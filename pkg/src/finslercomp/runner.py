"""Run a scenario: hypothesis gate, check dispatch, one JSON report.

Exit codes: 0 every check passed, 1 at least one bound was violated,
2 the sampled hypotheses rejected the scenario before any check ran,
3 at least one check aborted (numerical failure or an input the check
refuses); 3 wins over 1 when both happen. The CLI folds scenario files
that do not load into exit 2 as well.

Reports are deterministic for a fixed scenario and seed: no timestamps,
sorted keys, repr-roundtrip floats, grids capped at 2000 nodes. Set
FINSLERCOMP_THREADS to fan per-seed work out over a thread pool;
results are reduced in seed order, so the report does not depend on it.
"""

import json
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import lorentz as lz
from .comparison import (DEFAULT_TOL, _params_dict, bishop_profile,
                         check_bishop, check_bishop_gromov,
                         check_bonnet_myers, check_laplacian_comparison,
                         validate_hypotheses)
from .connection import integrate_geodesic
from .core import validate_homogeneity
from .curvature import (first_conjugate_point, matrix_lemma_residuals,
                        transverse_data)
from .errors import FinslerError, HypothesisRejection
from .report import CheckReport, _jsonable
from .weighted import monotonicity_check, weight_from_density

# per-check default tolerances; a scenario "tol" entry overrides
CHECK_TOLS = {
    "structure": 1e-8,
    "matrix_lemma": 1e-4,
    "legendre": 1e-8,
    "riccati": 1e-4,
    "monotonicity": 1e-9,
    "hessian": 1e-5,
}

GRID_CAP = 2000


class _Slot:
    __slots__ = ("lock", "state", "value")

    def __init__(self):
        self.lock = threading.Lock()
        self.state = None
        self.value = None


class _SeedCache:
    """Per-seed geodesic artifacts, computed once and shared by checks."""

    def __init__(self, scenario):
        self.sc = scenario
        self._lock = threading.Lock()
        self._store = {}

    def _get(self, key, make):
        with self._lock:
            slot = self._store.get(key)
            if slot is None:
                slot = self._store[key] = _Slot()
        with slot.lock:
            if slot.state is None:
                try:
                    slot.value = make()
                    slot.state = "ok"
                except Exception as exc:  # cache failures too
                    slot.value = exc
                    slot.state = "err"
        if slot.state == "err":
            raise slot.value
        return slot.value

    def path(self, i):
        x0, v0 = self.sc.seeds[i]
        return self._get(("path", i), lambda: integrate_geodesic(
            self.sc.space, x0, v0, float(self.sc.horizon)))

    def td(self, i):
        return self._get(("td", i), lambda: transverse_data(
            self.sc.space, self.path(i)))

    def weight(self, i):
        return self._get(("weight", i), lambda: weight_from_density(
            self.sc.space, self.sc.density, self.path(i)))

    def lagrange(self, i):
        return self._get(("lt", i), lambda: lz.lagrange_tensor(
            self.sc.space, self.path(i), self.sc.params.eps,
            density=self.sc.density))

    def profile(self, i):
        x0, v0 = self.sc.seeds[i]
        return self._get(("profile", i), lambda: bishop_profile(
            self.sc.space, x0, v0, float(self.sc.horizon), self.sc.params,
            density=self.sc.density))


def _fanout(fn, count):
    """fn(0..count-1), optionally on FINSLERCOMP_THREADS workers.

    Results come back in argument order and the first failing index
    raises first, so threading cannot change a report.
    """
    workers = int(os.environ.get("FINSLERCOMP_THREADS", "1") or "1")
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(workers, count)) as ex:
        futures = [ex.submit(fn, i) for i in range(count)]
        return [f.result() for f in futures]


def _reduce_seeds(name, reps, tol, scenario):
    """One report per bundle from per-seed reports: residual = per-seed
    max violation, diagnostics from the worst seed."""
    resid = [float(r.max_violation) for r in reps]
    worst = int(np.argmax(resid))
    diag = {"seeds": len(reps), "worst_seed": worst,
            "worst_diagnostics": reps[worst].diagnostics}
    return CheckReport.build(name, scenario, reps[0].params,
                             list(range(len(reps))), resid,
                             max(resid), tol, diag)


def _retol(rep, tol):
    if tol == rep.tolerance:
        return rep
    return CheckReport.build(rep.name, rep.scenario, rep.params, rep.grid,
                             rep.residuals, rep.max_violation, tol,
                             rep.diagnostics)


def _run_structure(sc, cache, entry, tol):
    return _retol(validate_homogeneity(sc.space, rng_seed=sc.seed), tol)


def _run_matrix_lemma(sc, cache, entry, tol):
    res = _fanout(lambda i: matrix_lemma_residuals(cache.td(i)),
                  len(sc.seeds))
    worst = [max(r["wronskian"], r["first_order"], r["second_order"])
             for r in res]
    diag = {"gauss_max": max(r["gauss"] for r in res), "per_seed": res}
    return CheckReport.build("matrix_lemma", sc.id, _params_dict(sc.params),
                             list(range(len(res))), worst, max(worst), tol,
                             diag)


def _run_conjugate(sc, cache, entry, tol):
    tcs = _fanout(lambda i: first_conjugate_point(cache.td(i)),
                  len(sc.seeds))
    expect = entry["expect"]
    resid = []
    for tc in tcs:
        if expect is None:
            resid.append(0.0 if tc is None else math.inf)
        elif tc is None:
            resid.append(math.inf)
        else:
            resid.append(abs(tc - expect) / max(1.0, expect))
    diag = {"expect": expect,
            "conjugate_t": [None if tc is None else float(tc)
                            for tc in tcs]}
    return CheckReport.build("conjugate", sc.id, _params_dict(sc.params),
                             list(range(len(tcs))), resid, max(resid), tol,
                             diag)


def _run_bishop(sc, cache, entry, tol):
    reps = _fanout(lambda i: check_bishop(cache.profile(i), tol=tol,
                                          scenario=sc.id), len(sc.seeds))
    return _reduce_seeds("bishop", reps, tol, sc.id)


def _run_bonnet_myers(sc, cache, entry, tol):
    fn = (lz.check_spacetime_bishop_myers
          if sc.space.signature == "lorentzian" else check_bonnet_myers)
    return fn(sc.space, sc.params, sc.seeds, t_end=sc.horizon,
              density=sc.density, tol=tol, scenario=sc.id)


def _run_laplacian(sc, cache, entry, tol):
    reps = _fanout(lambda i: check_laplacian_comparison(
        cache.td(i), cache.weight(i), sc.params, tol=tol, scenario=sc.id),
        len(sc.seeds))
    return _reduce_seeds("laplacian", reps, tol, sc.id)


def _run_bishop_gromov(sc, cache, entry, tol):
    if sc.space.signature == "lorentzian":
        return lz.sclv_volume_check(sc.space, sc.params, sc.origin,
                                    entry["sector"], entry["r"], entry["R"],
                                    density=sc.density, tol=tol,
                                    scenario=sc.id)
    return check_bishop_gromov(sc.space, sc.params, sc.origin, entry["r"],
                               entry["R"], density=sc.density, tol=tol,
                               scenario=sc.id)


def _run_raychaudhuri(sc, cache, entry, tol):
    reps = _fanout(lambda i: lz.check_raychaudhuri(
        cache.lagrange(i), sc.params.N, eps=sc.params.eps, tol=tol,
        scenario=sc.id), len(sc.seeds))
    return _reduce_seeds("raychaudhuri", reps, tol, sc.id)


def _run_riccati(sc, cache, entry, tol):
    resid = _fanout(lambda i: lz.riccati_residual(cache.lagrange(i),
                                                  eps=sc.params.eps),
                    len(sc.seeds))
    return CheckReport.build("riccati", sc.id, _params_dict(sc.params),
                             list(range(len(resid))), resid, max(resid),
                             tol, {"eps": sc.params.eps})


def _run_monotonicity(sc, cache, entry, tol):
    rep = monotonicity_check(sc.space, samples=int(entry.get("samples", 40)),
                             N_list=entry.get("N_list"), rng_seed=sc.seed,
                             density=sc.density)
    return _retol(rep, tol) if "tol" in entry else rep


def _run_legendre(sc, cache, entry, tol):
    count = int(entry.get("count", 64))
    U = lz._future_directions(sc.space, sc.origin, count=max(count, 16),
                              rng_seed=sc.seed)[:count]
    def one(i):
        v = [float(c) for c in U[i]]
        om = lz.legendre(sc.space, sc.origin, v)
        w = lz.legendre_inverse(sc.space, sc.origin, om)
        scale = max(1.0, max(abs(c) for c in v))
        return max(abs(a - b) for a, b in zip(w.coords, v)) / scale
    resid = _fanout(one, len(U))
    return CheckReport.build("legendre", sc.id, _params_dict(sc.params),
                             list(range(len(resid))), resid, max(resid),
                             tol, {"directions": len(resid)})


def _run_hessian(sc, cache, entry, tol):
    point = entry.get("point", sc.origin)
    return lz.hessian_symmetry_check(sc.space, entry["_f"], point, tol=tol,
                                     rng_seed=sc.seed, scenario=sc.id)


_DISPATCH = {
    "structure": _run_structure,
    "matrix_lemma": _run_matrix_lemma,
    "conjugate": _run_conjugate,
    "bishop": _run_bishop,
    "bonnet_myers": _run_bonnet_myers,
    "laplacian": _run_laplacian,
    "bishop_gromov": _run_bishop_gromov,
    "raychaudhuri": _run_raychaudhuri,
    "riccati": _run_riccati,
    "monotonicity": _run_monotonicity,
    "legendre": _run_legendre,
    "hessian": _run_hessian,
}


def report_json(report):
    """The canonical byte form of a report (used for files and stdout)."""
    return json.dumps(_jsonable(report), indent=1, sort_keys=True)


def _base_report(sc):
    return {
        "scenario": sc.id,
        "space": sc.space.name,
        "signature": sc.space.signature,
        "dim": sc.space.dim,
        "seed": sc.seed,
        "origin": [float(c) for c in sc.origin],
        "n_seeds": len(sc.seeds),
        "horizon": float(sc.horizon),
        "params": _params_dict(sc.params),
    }


def _write_outputs(sc, cache, report, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    names = {c["name"] for c in sc.checks}
    files = []
    if "bishop" in names:
        try:
            fname = os.path.join(out_dir, "%s.bishop_seed0.csv" % sc.id)
            cache.profile(0).write_csv(fname)
            files.append(fname)
        except FinslerError:
            pass
    if names & {"raychaudhuri", "riccati"}:
        try:
            fname = os.path.join(out_dir,
                                 "%s.raychaudhuri_seed0.csv" % sc.id)
            cache.lagrange(0).write_csv(fname)
            files.append(fname)
        except FinslerError:
            pass
    report["csv_files"] = [os.path.basename(f) for f in files]
    fname = os.path.join(out_dir, "%s.report.json" % sc.id)
    with open(fname, "w") as fh:
        fh.write(report_json(report))
        fh.write("\n")
    return fname


def run_scenario(sc, out_dir=None):
    """Execute every check of a loaded scenario.

    Returns (exit_code, report_dict); when out_dir is given the report
    and the seed-0 profile CSVs are also written there.
    """
    report = _base_report(sc)
    cache = _SeedCache(sc)

    if sc.validate:
        try:
            report["hypotheses"] = validate_hypotheses(
                sc.space, sc.params, density=sc.density, rng_seed=sc.seed)
        except HypothesisRejection as exc:
            report["hypotheses"] = {"rejected": str(exc)}
            report["checks"] = []
            report["verdict"] = "rejected"
            report["exit_code"] = 2
            if out_dir is not None:
                _write_outputs(sc, cache, report, out_dir)
            return 2, report
    else:
        report["hypotheses"] = None

    checks = []
    errored = False
    failed = False
    for entry in sc.checks:
        name = entry["name"]
        tol = float(entry.get("tol", CHECK_TOLS.get(name, DEFAULT_TOL)))
        try:
            rep = _DISPATCH[name](sc, cache, entry, tol)
        except FinslerError as exc:
            errored = True
            checks.append({"name": name, "verdict": "error",
                           "error": str(exc),
                           "error_type": type(exc).__name__})
            continue
        failed = failed or not rep.passed
        checks.append(rep.to_json_dict(grid_cap=GRID_CAP))

    report["checks"] = checks
    code = 3 if errored else (1 if failed else 0)
    report["verdict"] = {0: "pass", 1: "fail", 3: "error"}[code]
    report["exit_code"] = code
    if out_dir is not None:
        _write_outputs(sc, cache, report, out_dir)
    return code, report
