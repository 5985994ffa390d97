"""Biharmonicity residuals, verdicts and quantity audits.

Every characterization is evaluated as a numeric residual that is zero
exactly when the corresponding equation holds:

* direct bitension   tau2 = -m (Delta H - m H), using the constant-curvature
  contraction trace R^S(dphi ., H) dphi . = -m H of the unit sphere;
* normal/tangent split of tau2,
      normal  = Delta-perp H + trace B(., A_H .) - m H,
      tangent = 2 trace A_{nabla-perp H}(.) + (m/2) grad |H|^2,
  with tau2 = -m (normal + tangent) as an internal cross-check;
* the hypersurface system
      (i)  Delta f = (m - |A|^2) f,
      (ii) A(grad f) = -(m/2) f grad f;
* the PMC system  trace B(A_H ., .) = m H  and its equivalent pair
      <A_H, A_xi> = 0 for xi normal to H,   |A_H|^2 = m |H|^2.

Verdicts: ``minimal`` when H vanishes at every sample, ``biharmonic-proper``
when tau2 vanishes and H does not, ``not-biharmonic`` when tau2 is clearly
nonzero, ``inconclusive`` in the gap between the two thresholds.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import chart as chart_mod
from . import extrinsic
from .extrinsic import GeometryError, PointGeometry

PASS_TOL = 1e-6
FAIL_TOL = 1e-3

VERDICT_PROPER = "biharmonic-proper"
VERDICT_MINIMAL = "minimal"
VERDICT_NOT = "not-biharmonic"
VERDICT_INCONCLUSIVE = "inconclusive"


class AllSamplesFailed(RuntimeError):
    """Every sample point failed to evaluate; no verdict is possible."""


# ---------------------------------------------------------------------------
# per-sample residuals
# ---------------------------------------------------------------------------


def tau2_direct(geom: PointGeometry) -> np.ndarray:
    """Bitension field at the point, as an ambient vector."""
    return -geom.m * (geom.delta_H - geom.m * geom.H)


def sphere_curvature_contraction(geom: PointGeometry) -> np.ndarray:
    """trace R^S(dphi e_i, H) dphi e_i evaluated from the curvature formula
    R^S(X,Y)Z = <Y,Z>X - <X,Z>Y; equals -m H for any immersion, which is the
    identity tau2_direct hard-codes."""
    out = np.zeros_like(geom.H)
    for a in range(geom.m):
        x = geom.tangent_frame[a]
        out += np.dot(geom.H, x) * x - np.dot(x, x) * geom.H
    return out


def split_residuals(geom: PointGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Normal and tangent residual vectors of the split characterization."""
    normal = geom.delta_perp_H + geom.trace_B_AH - geom.m * geom.H
    tangent = 2.0 * geom.trace_A_nablaH + 0.5 * geom.m * geom.grad_H2
    return normal, tangent


def hypersurface_residuals(geom: PointGeometry) -> tuple[float, float]:
    """(|Delta f - (m - |A|^2) f|, ||A(grad f) + (m/2) f grad f||)."""
    if not geom.hypersurface:
        raise GeometryError("hypersurface residuals require n = m + 1")
    res_i = abs(geom.delta_f - (geom.m - geom.A2) * geom.f)
    gf_frame = geom.tangent_frame @ geom.grad_f
    a_gf = (geom.A @ gf_frame) @ geom.tangent_frame
    res_ii = float(np.linalg.norm(a_gf + 0.5 * geom.m * geom.f * geom.grad_f))
    return res_i, res_ii


# ---------------------------------------------------------------------------
# PMC block
# ---------------------------------------------------------------------------


@dataclass
class PMCBlock:
    parallel_norm: float          # max ||nabla-perp H|| over samples
    eq4_norm: float               # max ||trace B(A_H ., .) - m H||
    eq5a: float                   # max |<A_H, A_xi>| over xi normal to H
    eq5b: float                   # max | |A_H|^2 - m |H|^2 |
    applicable: bool              # parallel_norm < pass_tol
    equivalence_ok: bool | None   # eq4 and eq5 verdicts agree (when applicable)
    samples_with_H: int

    def to_dict(self) -> dict:
        return {
            "parallel_norm": self.parallel_norm,
            "eq4_norm": self.eq4_norm,
            "eq5a": self.eq5a,
            "eq5b": self.eq5b,
            "applicable": self.applicable,
            "equivalence_ok": self.equivalence_ok,
            "samples_with_H": self.samples_with_H,
        }


def pmc_check(geoms: list[PointGeometry], pass_tol: float = PASS_TOL) -> PMCBlock:
    """Evaluate the parallel-mean-curvature characterization over samples.

    Samples where H vanishes contribute only to the minimality side: the
    normal-frame completion of H/|H| is undefined there.
    """
    if not geoms:
        raise GeometryError("pmc_check needs at least one sample")
    parallel = 0.0
    eq4 = 0.0
    eq5a = 0.0
    eq5b = 0.0
    with_h = 0
    for g in geoms:
        parallel = max(parallel, g.nabla_perp_H_norm)
        if g.H_norm <= pass_tol:
            continue
        with_h += 1
        eq4 = max(eq4, float(np.linalg.norm(g.trace_B_AH - g.m * g.H)))
        eq5b = max(eq5b, abs(g.AH2 - g.m * g.H2))
        # complete H/|H| to an orthonormal normal frame and test the spanning set
        u0 = g.H / g.H_norm
        rest = g.normal_frame - np.outer(g.normal_frame @ u0, u0)
        frame, _ = extrinsic._mgs(rest, pivot=True)
        for xi in frame:
            coeffs = g.normal_frame @ xi
            a_xi = np.einsum("x,xab->ab", coeffs, g.B_frame)
            eq5a = max(eq5a, abs(float(np.sum(g.A_H * a_xi))))
    applicable = parallel < pass_tol
    equivalence: bool | None = None
    if applicable and with_h:
        equivalence = (eq4 < pass_tol) == (eq5a < pass_tol and eq5b < pass_tol)
    return PMCBlock(
        parallel_norm=parallel, eq4_norm=eq4, eq5a=eq5a, eq5b=eq5b,
        applicable=applicable, equivalence_ok=equivalence, samples_with_H=with_h,
    )


# ---------------------------------------------------------------------------
# whole-chart evaluation
# ---------------------------------------------------------------------------


@dataclass
class SampleRecord:
    point: tuple
    tau2_norm: float
    split_normal_norm: float
    split_tangent_norm: float
    split_gap: float
    H_norm: float
    B2: float
    nabla_perp_H_norm: float
    scalar_curvature: float | None
    hyper_i: float | None = None
    hyper_ii: float | None = None
    A2: float | None = None
    f: float | None = None

    def to_dict(self) -> dict:
        return {
            "point": list(self.point),
            "tau2_norm": self.tau2_norm,
            "split_normal_norm": self.split_normal_norm,
            "split_tangent_norm": self.split_tangent_norm,
            "split_gap": self.split_gap,
            "H_norm": self.H_norm,
            "B2": self.B2,
            "nabla_perp_H_norm": self.nabla_perp_H_norm,
            "scalar_curvature": self.scalar_curvature,
            "hyper_i": self.hyper_i,
            "hyper_ii": self.hyper_ii,
            "A2": self.A2,
            "f": self.f,
        }


@dataclass
class AuditEntry:
    name: str
    measured: float
    predicted: float | None
    deviation: float
    ok: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "predicted": self.predicted,
            "deviation": self.deviation,
            "ok": self.ok,
            "note": self.note,
        }


@dataclass
class ResidualReport:
    chart: dict
    samples_used: int
    samples_requested: int
    seed: int
    pass_tol: float
    fail_tol: float
    per_sample: list[SampleRecord]
    pmc: PMCBlock
    verdict: str
    failures: list[str] = field(default_factory=list)
    audit: list[AuditEntry] = field(default_factory=list)

    # aggregate helpers ----------------------------------------------------

    def max_of(self, attr: str) -> float:
        vals = [getattr(s, attr) for s in self.per_sample if getattr(s, attr) is not None]
        return max(vals) if vals else 0.0

    def min_of(self, attr: str) -> float:
        vals = [getattr(s, attr) for s in self.per_sample if getattr(s, attr) is not None]
        return min(vals) if vals else 0.0

    def mean_of(self, attr: str) -> float:
        vals = [getattr(s, attr) for s in self.per_sample if getattr(s, attr) is not None]
        return float(sum(vals) / len(vals)) if vals else 0.0

    @property
    def hypersurface(self) -> bool:
        return self.chart["n"] == self.chart["m"] + 1

    def quantities(self) -> dict:
        m = self.chart["m"]
        h_max = self.max_of("H_norm")
        h_min = self.min_of("H_norm")
        cmc = (h_max - h_min) <= 1e-6 * (1.0 + h_max)
        out = {
            "H_norm": {"min": h_min, "max": h_max, "mean": self.mean_of("H_norm")},
            "B2": {"min": self.min_of("B2"), "max": self.max_of("B2"),
                   "mean": self.mean_of("B2")},
            "cmc": cmc,
            "minimal": h_max < self.pass_tol,
        }
        if m >= 2:
            out["scalar_curvature"] = {
                "min": self.min_of("scalar_curvature"),
                "max": self.max_of("scalar_curvature"),
                "mean": self.mean_of("scalar_curvature"),
            }
        if self.hypersurface:
            out["A2"] = {"min": self.min_of("A2"), "max": self.max_of("A2"),
                         "mean": self.mean_of("A2")}
            out["f"] = {"min": self.min_of("f"), "max": self.max_of("f"),
                        "mean": self.mean_of("f")}
        return out

    def residual_summary(self) -> dict:
        m = self.chart["m"]

        def norm_scale(rec: SampleRecord) -> float:
            return m * (1.0 + rec.H_norm ** 2)

        tau_max = self.max_of("tau2_norm")
        out = {
            "tau2_direct_norm": {
                "max": tau_max,
                "mean": self.mean_of("tau2_norm"),
                "max_normalized": max(
                    (s.tau2_norm / norm_scale(s) for s in self.per_sample),
                    default=0.0,
                ),
            },
            "split_normal_norm": {
                "max": self.max_of("split_normal_norm"),
                "mean": self.mean_of("split_normal_norm"),
                "max_normalized": max(
                    (s.split_normal_norm / norm_scale(s) for s in self.per_sample),
                    default=0.0,
                ),
            },
            "split_tangent_norm": {
                "max": self.max_of("split_tangent_norm"),
                "mean": self.mean_of("split_tangent_norm"),
                "max_normalized": max(
                    (s.split_tangent_norm / norm_scale(s) for s in self.per_sample),
                    default=0.0,
                ),
            },
            "split_direct_gap": {"max": self.max_of("split_gap")},
            "pmc": self.pmc.to_dict(),
        }
        if self.hypersurface:
            out["hyper_i_residual"] = {"max": self.max_of("hyper_i"),
                                       "mean": self.mean_of("hyper_i")}
            out["hyper_ii_residual"] = {"max": self.max_of("hyper_ii"),
                                        "mean": self.mean_of("hyper_ii")}
        return out

    def to_report_dict(self, config_echo: dict | None = None, tool_version: str = "") -> dict:
        return {
            "tool_version": tool_version,
            "config_echo": config_echo or {},
            "chart": self.chart,
            "samples": self.samples_used,
            "seed": self.seed,
            "thresholds": {"pass_tol": self.pass_tol, "fail_tol": self.fail_tol},
            "residuals": self.residual_summary(),
            "quantities": self.quantities(),
            "per_sample": [s.to_dict() for s in self.per_sample],
            "failures": list(self.failures),
            "audit": [a.to_dict() for a in self.audit],
            "verdict": self.verdict,
        }


def resolve_threads(threads: int | None = None) -> int:
    """Thread budget: explicit argument, else BITENSION_THREADS (0 = auto)."""
    if threads is None:
        raw = os.environ.get("BITENSION_THREADS", "")
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError:
            return 1
    if threads == 0:
        return os.cpu_count() or 1
    return max(1, threads)


def _verdict(tau_max: float, h_max: float, h_min: float,
             pass_tol: float, fail_tol: float) -> str:
    if h_max < pass_tol:
        return VERDICT_MINIMAL
    if tau_max < pass_tol and h_min > pass_tol:
        return VERDICT_PROPER
    if tau_max > fail_tol:
        return VERDICT_NOT
    return VERDICT_INCONCLUSIVE


def evaluate_chart(
    spec: chart_mod.ChartSpec,
    samples: int = 64,
    seed: int = 42,
    pass_tol: float = PASS_TOL,
    fail_tol: float = FAIL_TOL,
    threads: int | None = None,
    with_audit: bool = True,
) -> ResidualReport:
    """Evaluate every characterization over deterministic samples."""
    if not 0 < pass_tol < fail_tol:
        raise ValueError("tolerances must satisfy 0 < pass_tol < fail_tol")
    points = chart_mod.sample_points(spec, samples, seed)

    def one(point):
        return extrinsic.compute_geometry(spec, point)

    nthreads = resolve_threads(threads)
    geoms: list[PointGeometry | None] = []
    failures: list[str] = []
    if nthreads > 1:
        def safe(point):
            try:
                return one(point)
            except (GeometryError, chart_mod.ChartError) as e:
                return e
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            results = list(pool.map(safe, points))
        for res in results:
            if isinstance(res, Exception):
                failures.append(str(res))
                geoms.append(None)
            else:
                geoms.append(res)
    else:
        for point in points:
            try:
                geoms.append(one(point))
            except (GeometryError, chart_mod.ChartError) as e:
                failures.append(str(e))
                geoms.append(None)

    good = [g for g in geoms if g is not None]
    if not good:
        raise AllSamplesFailed(
            f"all {samples} samples failed; first failure: {failures[0]}"
        )

    records = []
    for g in good:
        tau = tau2_direct(g)
        normal, tangent = split_residuals(g)
        tau_norm = float(np.linalg.norm(tau))
        gap = float(np.linalg.norm(tau + g.m * (normal + tangent)))
        rec = SampleRecord(
            point=tuple(float(x) for x in g.point),
            tau2_norm=tau_norm,
            split_normal_norm=float(np.linalg.norm(normal)),
            split_tangent_norm=float(np.linalg.norm(tangent)),
            split_gap=gap,
            H_norm=g.H_norm,
            B2=g.B2,
            nabla_perp_H_norm=g.nabla_perp_H_norm,
            scalar_curvature=(
                extrinsic.intrinsic_curvature(g).scalar if g.m >= 2 else None
            ),
        )
        if g.hypersurface:
            rec.hyper_i, rec.hyper_ii = hypersurface_residuals(g)
            rec.A2 = g.A2
            rec.f = g.f
        records.append(rec)

    pmc = pmc_check(good, pass_tol)
    report = ResidualReport(
        chart=spec.describe(),
        samples_used=len(good),
        samples_requested=samples,
        seed=seed,
        pass_tol=pass_tol,
        fail_tol=fail_tol,
        per_sample=records,
        pmc=pmc,
        verdict=_verdict(
            max(r.tau2_norm for r in records),
            max(r.H_norm for r in records),
            min(r.H_norm for r in records),
            pass_tol,
            fail_tol,
        ),
        failures=failures,
    )
    if with_audit and report.verdict == VERDICT_PROPER:
        report.audit = quantity_audit(report)
    return report


# ---------------------------------------------------------------------------
# quantity audit (proper biharmonic charts only)
# ---------------------------------------------------------------------------

_SPECIAL_B2 = {"flat-torus value": 6.0, "Veronese value": 14.0 / 3.0}
_AUDIT_TOL = 1e-6


def quantity_audit(report: ResidualReport) -> list[AuditEntry]:
    """Check the reported invariants of a proper biharmonic chart against the
    constant-mean-curvature, hypersurface and PMC predictions."""
    if report.verdict != VERDICT_PROPER:
        raise ValueError("quantity_audit applies to biharmonic-proper reports")
    m = report.chart["m"]
    q = report.quantities()
    entries: list[AuditEntry] = []
    h = q["H_norm"]["mean"]

    if q["cmc"]:
        dev = max(0.0, h - 1.0)
        entries.append(AuditEntry(
            name="cmc-mean-curvature-range", measured=h, predicted=None,
            deviation=dev, ok=(0.0 < h <= 1.0 + _AUDIT_TOL),
            note="CMC proper biharmonic requires |H| in (0, 1]",
        ))
        if abs(h - 1.0) <= _AUDIT_TOL:
            entries.append(AuditEntry(
                name="mean-curvature-composition-locus", measured=h, predicted=1.0,
                deviation=abs(h - 1.0), ok=True,
                note="|H| = 1: induces a minimal immersion into a small "
                     "hypersphere of radius 1/sqrt(2)",
            ))

    if report.hypersurface:
        a2 = q["A2"]["mean"]
        entries.append(AuditEntry(
            name="shape-operator-norm", measured=a2, predicted=float(m),
            deviation=abs(a2 - m), ok=abs(a2 - m) <= _AUDIT_TOL,
            note="CMC proper biharmonic hypersurfaces have |A|^2 = m",
        ))
        if m >= 2:    # a curve has no scalar curvature
            s_meas = q["scalar_curvature"]["mean"]
            s_pred = m * m * (1.0 + h * h) - 2.0 * m
            entries.append(AuditEntry(
                name="scalar-curvature", measured=s_meas, predicted=s_pred,
                deviation=abs(s_meas - s_pred), ok=abs(s_meas - s_pred) <= 1e-5,
                note="s = m^2 (1 + |H|^2) - 2m, constant and positive",
            ))
        if m > 2 and q["cmc"]:
            bound = (m - 2.0) / m
            in_low = h <= bound + _AUDIT_TOL
            at_one = abs(h - 1.0) <= _AUDIT_TOL
            note = "|H| must lie in (0, (m-2)/m] or equal 1"
            if abs(h - bound) <= _AUDIT_TOL:
                note += "; boundary case |H| = (m-2)/m: locus of the standard "
                note += "product S^{m-1} x S^1 of radii 1/sqrt(2)"
            if at_one:
                note += "; |H| = 1: small-hypersphere locus"
            entries.append(AuditEntry(
                name="mean-curvature-dichotomy", measured=h, predicted=bound,
                deviation=0.0 if (in_low or at_one) else min(abs(h - 1.0), h - bound),
                ok=in_low or at_one, note=note,
            ))

    if report.pmc.applicable:
        b2 = q["B2"]["mean"]
        entries.append(AuditEntry(
            name="second-fundamental-form-lower-bound", measured=b2,
            predicted=float(m), deviation=max(0.0, m - b2),
            ok=b2 >= m - _AUDIT_TOL,
            note="PMC proper biharmonic requires m <= |B|^2"
                 + ("; equality: reduces to a CMC hypersurface of a totally "
                    "geodesic subsphere" if abs(b2 - m) <= _AUDIT_TOL else ""),
        ))
        if m == 2:
            for label, value in _SPECIAL_B2.items():
                if abs(b2 - value) <= 1e-4:
                    entries.append(AuditEntry(
                        name="b-norm-special-value", measured=b2, predicted=value,
                        deviation=abs(b2 - value), ok=True,
                        note=f"|B|^2 matches the parallel-surface {label}",
                    ))
        if m > 2 and abs(b2 - 3.0 * m) <= 1e-4:
            entries.append(AuditEntry(
                name="b-norm-special-value", measured=b2, predicted=3.0 * m,
                deviation=abs(b2 - 3.0 * m), ok=True,
                note="|B|^2 = 3m: product-of-spheres value in codimension 2",
            ))
    return entries
