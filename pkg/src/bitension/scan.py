"""Residual profiles over 1-parameter chart families and root location.

The aggregate residual driving the root search is the maximum of ||tau2||
over a fixed set of sample points (the biharmonic locus needs the residual
to vanish everywhere, so the max is the conservative aggregate; the same
points are reused at every parameter value, which keeps the profile smooth
in the parameter).

Minima of the profile below the failure threshold are bracketed on the grid
and refined by bisection on the sign of the finite-difference slope, with a
symmetric shrink when the probe is flat; parameter tolerance 1e-8, one order
below the 1e-6 reporting precision.  Every refined root is re-verified with
a full ResidualReport and reported only if that verdict is proper biharmonic
or minimal.

Grid endpoints are never reported as interior roots; an endpoint where the
profile is still falling is labeled separately as boundary behavior (the
small-hypersphere family ends in the minimal equator at r = 1 this way).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import biharmonic, chart as chart_mod, extrinsic

PARAM_TOL = 1e-8
BUDGET = 200_000


class ScanError(ValueError):
    """Invalid family specification."""


@dataclass
class FamilySpec:
    """A catalog tag or chart document with one designated free parameter."""

    param_name: str
    lo: float
    hi: float
    steps: int
    tag: str | None = None
    doc: dict | None = None
    fixed: dict = field(default_factory=dict)
    samples_per_point: int = 8
    seed: int = 42
    pass_tol: float = biharmonic.PASS_TOL
    fail_tol: float = biharmonic.FAIL_TOL

    def __post_init__(self):
        if (self.tag is None) == (self.doc is None):
            raise ScanError("exactly one of tag/doc must be given")
        if self.steps < 8:
            raise ScanError(f"steps must be >= 8, got {self.steps}")
        if not self.lo < self.hi:
            raise ScanError(f"empty parameter range [{self.lo}, {self.hi}]")
        if self.samples_per_point < 1:
            raise ScanError("samples_per_point must be positive")
        if self.steps * self.samples_per_point > BUDGET:
            raise ScanError(
                f"steps * samples_per_point exceeds the budget {BUDGET}"
            )
        # the range must sit inside the admissible parameter domain
        for t in (self.lo, self.hi):
            try:
                self.chart_at(t)
            except chart_mod.ChartError as e:
                raise ScanError(
                    f"parameter value {t} outside the admissible domain: {e}"
                ) from e

    def chart_at(self, t: float) -> chart_mod.ChartSpec:
        if self.tag is not None:
            params = chart_mod.family_params(self.tag, self.param_name, float(t),
                                             self.fixed)
            return chart_mod.catalog_chart(self.tag, params)
        doc = dict(self.doc)
        params = dict(doc.get("params", {}))
        params.update(self.fixed)
        params[self.param_name] = float(t)
        doc["params"] = params
        return chart_mod.parse_chart(doc)

    def describe(self) -> dict:
        d = {
            "param": self.param_name,
            "range": [self.lo, self.hi],
            "steps": self.steps,
            "samples_per_point": self.samples_per_point,
            "seed": self.seed,
            "thresholds": {"pass_tol": self.pass_tol, "fail_tol": self.fail_tol},
        }
        if self.tag is not None:
            d["catalog"] = self.tag
            if self.fixed:
                d["fixed_params"] = dict(self.fixed)
        else:
            d["chart"] = self.doc.get("name", "custom")
        return d


@dataclass
class GridRow:
    param: float
    max_residual: float | None
    mean_residual: float | None
    H_norm: float | None
    verdict: str
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "param": self.param,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "H_norm": self.H_norm,
            "verdict": self.verdict,
            "error": self.error,
        }


@dataclass
class Root:
    param: float
    residual: float
    classification: str  # 'proper-biharmonic' | 'minimal'
    bisection_iterations: int
    H_norm: float

    def to_dict(self) -> dict:
        return {
            "param": self.param,
            "residual": self.residual,
            "classification": self.classification,
            "bisection_iterations": self.bisection_iterations,
            "H_norm": self.H_norm,
        }


@dataclass
class ScanResult:
    family: dict
    grid: list[GridRow]
    roots: list[Root]
    boundary: list[dict]

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "grid": [r.to_dict() for r in self.grid],
            "roots": [r.to_dict() for r in self.roots],
            "boundary": list(self.boundary),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        lines = ["param,max_residual,mean_residual,H_norm,verdict"]
        for r in self.grid:
            if r.error is not None:
                lines.append(f"{r.param!r},,,,{r.verdict}")
            else:
                lines.append(
                    f"{r.param!r},{r.max_residual!r},{r.mean_residual!r},"
                    f"{r.H_norm!r},{r.verdict}"
                )
        for root in self.roots:
            lines.append(
                f"{root.param!r},{root.residual!r},{root.residual!r},"
                f"{root.H_norm!r},root:{root.classification}"
            )
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------


def _profile(family: FamilySpec, points: np.ndarray, cache: dict):
    """max/mean ||tau2|| and max |H| at one parameter value, memoized."""

    def at(t: float):
        key = float(t)
        hit = cache.get(key)
        if hit is not None:
            return hit
        spec = family.chart_at(key)
        taus = []
        hs = []
        for p in points:
            g = extrinsic.compute_geometry(spec, p)
            taus.append(float(np.linalg.norm(biharmonic.tau2_direct(g))))
            hs.append(g.H_norm)
        out = (max(taus), float(np.mean(taus)), max(hs), min(hs))
        cache[key] = out
        return out

    return at


def _refine(profile_at, a: float, b: float, xtol: float = PARAM_TOL):
    """Locate the minimum of the residual profile inside [a, b].

    Bisection on the sign of a symmetric slope probe around the midpoint;
    when the probe cannot tell the sides apart (flat bottom) the bracket
    shrinks symmetrically instead, which is the golden-section-style
    fallback for kink-shaped minima.
    """
    iterations = 0
    while b - a > xtol and iterations < 300:
        mid = 0.5 * (a + b)
        delta = max((b - a) / 8.0, xtol / 4.0)
        f1 = profile_at(mid - delta)[0]
        f2 = profile_at(mid + delta)[0]
        iterations += 1
        if f1 > f2:
            a = mid - delta
        elif f2 > f1:
            b = mid + delta
        else:
            a, b = mid - delta, mid + delta
    return 0.5 * (a + b), iterations


def sweep(family: FamilySpec) -> ScanResult:
    """Residual profile over the uniform grid plus refined, re-verified roots."""
    ts = np.linspace(family.lo, family.hi, family.steps)
    mid_chart = family.chart_at(0.5 * (family.lo + family.hi))
    points = chart_mod.sample_points(mid_chart, family.samples_per_point,
                                     family.seed)
    cache: dict = {}
    profile_at = _profile(family, points, cache)

    grid: list[GridRow] = []
    values: list[float | None] = []
    for t in ts:
        try:
            tau_max, tau_mean, h_max, h_min = profile_at(float(t))
        except (chart_mod.ChartError, extrinsic.GeometryError) as e:
            grid.append(GridRow(param=float(t), max_residual=None,
                                mean_residual=None, H_norm=None,
                                verdict="error", error=str(e)))
            values.append(None)
            continue
        verdict = biharmonic._verdict(tau_max, h_max, h_min,
                                      family.pass_tol, family.fail_tol)
        grid.append(GridRow(param=float(t), max_residual=tau_max,
                            mean_residual=tau_mean, H_norm=h_max,
                            verdict=verdict))
        values.append(tau_max)

    roots: list[Root] = []
    for i in range(1, family.steps - 1):
        v = values[i]
        if v is None or values[i - 1] is None or values[i + 1] is None:
            continue
        if not (v <= values[i - 1] and v <= values[i + 1]):
            continue
        # a zero crossed by the grid leaves a local minimum no larger than
        # one grid step of slope; a smooth positive minimum sits far above it
        slope_step = max(abs(v - values[i - 1]), abs(values[i + 1] - v))
        if not (v < family.fail_tol or v <= 0.75 * slope_step):
            continue
        try:
            t_root, iters = _refine(profile_at, float(ts[i - 1]), float(ts[i + 1]))
            report = biharmonic.evaluate_chart(
                family.chart_at(t_root), samples=family.samples_per_point,
                seed=family.seed, pass_tol=family.pass_tol,
                fail_tol=family.fail_tol, with_audit=False,
            )
        except (chart_mod.ChartError, extrinsic.GeometryError,
                biharmonic.AllSamplesFailed):
            continue
        refined = report.max_of("tau2_norm")
        if refined >= family.pass_tol:
            continue
        if report.verdict == biharmonic.VERDICT_PROPER:
            cls = "proper-biharmonic"
        elif report.verdict == biharmonic.VERDICT_MINIMAL:
            cls = "minimal"
        else:
            continue
        if roots and abs(roots[-1].param - t_root) < 1e-6:
            continue
        roots.append(Root(param=float(t_root), residual=refined,
                          classification=cls, bisection_iterations=iters,
                          H_norm=report.max_of("H_norm")))
    roots.sort(key=lambda r: r.param)

    boundary: list[dict] = []
    ok_vals = [v for v in values if v is not None]
    if len(ok_vals) >= 3:
        if (values[0] is not None and values[1] is not None
                and values[2] is not None
                and values[0] < values[1] < values[2]):
            boundary.append(_boundary_entry(grid, 0, "lo"))
        if (values[-1] is not None and values[-2] is not None
                and values[-3] is not None
                and values[-1] < values[-2] < values[-3]):
            boundary.append(_boundary_entry(grid, -1, "hi"))

    return ScanResult(family=family.describe(), grid=grid, roots=roots,
                      boundary=boundary)


def _boundary_entry(grid: list[GridRow], idx: int, side: str) -> dict:
    row = grid[idx]
    prev = grid[idx - 1] if idx == -1 else grid[idx + 1]
    h_trend = (row.H_norm is not None and prev.H_norm is not None
               and row.H_norm < prev.H_norm)
    note = "residual still decreasing at the range boundary"
    if h_trend:
        note += "; |H| decreasing as well (minimal limit candidate)"
    return {"param": row.param, "side": side, "residual": row.max_residual,
            "H_norm": row.H_norm, "note": note}


def veronese_radius_scan(lo: float, hi: float, steps: int,
                         **kwargs) -> ScanResult:
    """Profile of the constant-curvature parallel-surface family over its
    radius; the expected locus is one proper biharmonic root at 1/sqrt(2)
    and the minimal immersion at radius 1."""
    if not 0.0 < lo < hi <= 1.0:
        raise ScanError(f"radius range must satisfy 0 < lo < hi <= 1, got "
                        f"[{lo}, {hi}]")
    fam = FamilySpec(tag="veronese", param_name="r", lo=lo, hi=hi,
                     steps=steps, **kwargs)
    return sweep(fam)
