"""CheckReport: the one result type every theorem check returns."""

import csv
import json
import math
from dataclasses import dataclass, field


def _jsonable(x):
    """Floats stay floats (repr round-trip via json); infinities become strings."""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if hasattr(x, "item"):  # numpy scalar
        return _jsonable(x.item())
    return x


@dataclass
class CheckReport:
    """Per-grid-point residuals and a verdict for one theorem check.

    verdict is "pass" iff max_violation <= tolerance; callers never set it
    directly (see build).
    """

    name: str
    scenario: str
    params: dict
    grid: list
    residuals: list
    max_violation: float
    tolerance: float
    verdict: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == "pass"

    @staticmethod
    def build(name, scenario, params, grid, residuals, max_violation,
              tolerance, diagnostics=None):
        verdict = "pass" if max_violation <= tolerance else "fail"
        return CheckReport(
            name=name,
            scenario=scenario,
            params=dict(params or {}),
            grid=list(grid),
            residuals=list(residuals),
            max_violation=float(max_violation),
            tolerance=float(tolerance),
            verdict=verdict,
            diagnostics=dict(diagnostics or {}),
        )

    def to_json_dict(self, grid_cap=2000):
        grid = list(self.grid)
        residuals = list(self.residuals)
        if len(grid) > grid_cap:
            # stride subsample for the report; full data belongs in CSV
            stride = -(-len(grid) // grid_cap)
            grid = grid[::stride]
            residuals = residuals[::stride]
        out = {
            "name": self.name,
            "scenario": self.scenario,
            "params": _jsonable(self.params),
            "grid": _jsonable(grid),
            "residuals": _jsonable(residuals),
            "max_violation": _jsonable(float(self.max_violation)),
            "tolerance": float(self.tolerance),
            "verdict": self.verdict,
        }
        if self.diagnostics:
            out["diagnostics"] = _jsonable(self.diagnostics)
        return out

    def to_json(self, grid_cap=2000):
        return json.dumps(self.to_json_dict(grid_cap=grid_cap),
                          indent=1, sort_keys=True)


def write_csv(path, header, columns):
    """Plain CSV writer for profile data; columns are equal-length sequences."""
    rows = zip(*columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(c)) for c in row])
