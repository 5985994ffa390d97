"""Family sweeps: root location, determinism, stability, serialization."""

import json
import math

import pytest

from bitension import scan
from bitension.scan import FamilySpec, ScanError, sweep, veronese_radius_scan

ROOT2INV = 1.0 / math.sqrt(2.0)


@pytest.fixture(scope="module")
def sphere_scan():
    fam = FamilySpec(tag="small-hypersphere", param_name="r", lo=0.3, hi=0.99,
                     steps=200, fixed={"m": 2}, samples_per_point=6)
    return sweep(fam)


def test_sphere_family_root(sphere_scan):
    roots = sphere_scan.roots
    assert len(roots) == 1
    assert abs(roots[0].param - ROOT2INV) < 1e-6
    assert roots[0].classification == "proper-biharmonic"
    assert roots[0].residual < 1e-6
    assert abs(roots[0].H_norm - 1.0) < 1e-6


def test_sphere_family_grid(sphere_scan):
    rows = sphere_scan.grid
    assert len(rows) == 200
    assert rows[0].param == 0.3 and rows[-1].param == 0.99
    # profile matches the closed-form family residual everywhere
    for row in rows[::25]:
        r = row.param
        ref = 4.0 * (math.sqrt(1 - r * r) / r) * abs(1.0 / (r * r) - 2.0)
        assert abs(row.max_residual - ref) < 1e-9 * (1 + ref)


def test_sphere_family_boundary_label():
    fam = FamilySpec(tag="small-hypersphere", param_name="r", lo=0.75, hi=0.999,
                     steps=40, fixed={"m": 2}, samples_per_point=4)
    res = sweep(fam)
    sides = {b["side"] for b in res.boundary}
    assert "hi" in sides
    hi = [b for b in res.boundary if b["side"] == "hi"][0]
    assert "minimal limit" in hi["note"]
    # the boundary is never promoted to an interior root
    assert all(r.param < 0.998 for r in res.roots)


def test_torus_family_root():
    fam = FamilySpec(tag="clifford-torus-b3", param_name="t", lo=0.2, hi=0.69,
                     steps=200, samples_per_point=6)
    res = sweep(fam)
    assert len(res.roots) == 1
    assert abs(res.roots[0].param - 0.5) < 1e-6
    assert res.roots[0].classification == "proper-biharmonic"
    assert abs(res.roots[0].H_norm - 1.0) < 1e-6


def test_product_spheres_family_roots():
    # sweeping r binds r1 = r, r2 = sqrt(1 - r^2); the range contains both
    # the proper biharmonic locus at equal radii and the minimal product at
    # r = sqrt(m1/m), and the classifications must tell them apart
    fam = FamilySpec(tag="product-spheres", param_name="r", lo=0.5, hi=0.9,
                     steps=80, fixed={"m1": 2, "m2": 1}, samples_per_point=4)
    res = sweep(fam)
    assert len(res.roots) == 2
    proper, minimal = res.roots
    assert abs(proper.param - ROOT2INV) < 1e-6
    assert proper.classification == "proper-biharmonic"
    assert abs(proper.H_norm - 1.0 / 3.0) < 1e-6
    assert abs(minimal.param - math.sqrt(2.0 / 3.0)) < 1e-6
    assert minimal.classification == "minimal"


def test_veronese_radius_scan():
    res = veronese_radius_scan(0.5, 0.99, 100, samples_per_point=4)
    assert len(res.roots) == 1
    assert abs(res.roots[0].param - ROOT2INV) < 1e-6
    assert res.roots[0].classification == "proper-biharmonic"
    assert abs(res.roots[0].H_norm - 1.0) < 1e-6


def test_veronese_minimal_endpoint():
    res = veronese_radius_scan(0.9, 1.0, 12, samples_per_point=4)
    last = res.grid[-1]
    assert last.param == 1.0
    assert last.verdict == "minimal"
    with pytest.raises(ScanError):
        veronese_radius_scan(0.0, 0.9, 12)


def test_scan_determinism():
    kw = dict(tag="small-hypersphere", param_name="r", lo=0.6, hi=0.8,
              steps=30, fixed={"m": 2}, samples_per_point=4, seed=5)
    a = sweep(FamilySpec(**kw)).to_json()
    b = sweep(FamilySpec(**kw)).to_json()
    assert a == b


def test_root_stability_under_sample_doubling():
    kw = dict(tag="small-hypersphere", param_name="r", lo=0.65, hi=0.78,
              steps=20, fixed={"m": 2})
    r1 = sweep(FamilySpec(samples_per_point=4, **kw)).roots[0].param
    r2 = sweep(FamilySpec(samples_per_point=8, **kw)).roots[0].param
    assert abs(r1 - r2) < 1e-7


def test_no_root_range():
    fam = FamilySpec(tag="small-hypersphere", param_name="r", lo=0.3, hi=0.55,
                     steps=20, fixed={"m": 2}, samples_per_point=4)
    res = sweep(fam)
    assert res.roots == []
    assert len(res.grid) == 20
    assert all(r.verdict == "not-biharmonic" for r in res.grid)


def test_family_validation():
    with pytest.raises(ScanError, match="steps"):
        FamilySpec(tag="small-hypersphere", param_name="r", lo=0.3, hi=0.9,
                   steps=4, fixed={"m": 2})
    with pytest.raises(ScanError, match="admissible"):
        FamilySpec(tag="clifford-torus-b3", param_name="t", lo=0.2, hi=0.9,
                   steps=20)
    with pytest.raises(ScanError, match="budget"):
        FamilySpec(tag="small-hypersphere", param_name="r", lo=0.3, hi=0.9,
                   steps=10_000, fixed={"m": 2}, samples_per_point=100)
    with pytest.raises(ScanError, match="exactly one"):
        FamilySpec(param_name="r", lo=0.3, hi=0.9, steps=20)
    with pytest.raises(ScanError):
        FamilySpec(tag="small-hypersphere", param_name="r", lo=0.9, hi=0.3,
                   steps=20, fixed={"m": 2})


def test_chart_document_family():
    doc = {
        "name": "scaled-circle", "m": 1, "n": 2,
        "expressions": ["rho * cos(u1)", "rho * sin(u1)",
                        "sqrt(1 - rho^2 + 1e-30)"],
        "domain": [[0.0, 2 * math.pi]],
        "params": {"rho": 0.5},
    }
    fam = FamilySpec(doc=doc, param_name="rho", lo=0.4, hi=0.95, steps=60,
                     samples_per_point=4)
    res = sweep(fam)
    assert len(res.roots) == 1
    assert abs(res.roots[0].param - ROOT2INV) < 1e-6


def test_grid_errors_flagged_not_fatal():
    # the chart builds for every rho but fails evaluation once 1 - rho^2 + c
    # goes negative inside sqrt: those grid points are flagged, the rest of
    # the profile survives
    doc = {
        "name": "overshoot", "m": 1, "n": 2,
        "expressions": ["rho * cos(u1)", "rho * sin(u1)",
                        "sqrt(1.21 - rho^2)"],
        "domain": [[0.0, 2 * math.pi]],
        "params": {"rho": 0.5},
        "normalize": True,
    }
    fam = FamilySpec(doc=doc, param_name="rho", lo=0.8, hi=1.15, steps=15,
                     samples_per_point=3)
    res = sweep(fam)
    errored = [r for r in res.grid if r.verdict == "error"]
    fine = [r for r in res.grid if r.verdict != "error"]
    assert errored and fine
    assert all(r.param > 1.1 for r in errored)
    assert all(r.error is not None for r in errored)
    csv = res.to_csv()
    assert ",,,,error" in csv


def test_csv_output(sphere_scan):
    csv = sphere_scan.to_csv()
    lines = csv.strip().split("\n")
    assert lines[0] == "param,max_residual,mean_residual,H_norm,verdict"
    assert len(lines) == 1 + 200 + len(sphere_scan.roots)
    root_lines = [l for l in lines if "root:" in l]
    assert len(root_lines) == 1
    param = float(root_lines[0].split(",")[0])
    assert abs(param - ROOT2INV) < 1e-6
    assert root_lines[0].endswith("root:proper-biharmonic")


def test_json_round_trip(sphere_scan):
    text = sphere_scan.to_json()
    assert json.dumps(json.loads(text), indent=2, sort_keys=True) == text


def test_all_roots_verified(sphere_scan):
    for root in sphere_scan.roots:
        assert root.residual < 1e-6
        assert root.classification in ("proper-biharmonic", "minimal")
        assert root.bisection_iterations > 0
