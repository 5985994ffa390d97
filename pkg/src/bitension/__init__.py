"""Numerical verification of biharmonic submanifold geometry in the unit sphere.

Given a parametric immersion into S^n, the engine computes all extrinsic
invariants from truncated Taylor jets and evaluates every biharmonicity
characterization as a numeric residual: the direct bitension field, its
normal/tangent split, the hypersurface system and the parallel-mean-curvature
system, plus parameter-family scans that locate the biharmonic locus.
"""

__version__ = "0.1.0"

from .jets import Jet, JetDomainError, JetError, elementary, seed_variable, variables
from .expr import ExprSyntaxError, parse, to_string
from .chart import (
    ChartError,
    ChartSpec,
    catalog_chart,
    catalog_entries,
    eval_jet,
    eval_real,
    parse_chart,
    parse_chart_file,
    perturbed_chart,
    sample_points,
)
from .extrinsic import (
    GeometryError,
    IntrinsicCurvature,
    PointGeometry,
    compute_geometry,
    gauss_ricci_check,
    intrinsic_curvature,
    nabla_A_symmetry_check,
)
from .biharmonic import (
    AllSamplesFailed,
    PMCBlock,
    ResidualReport,
    evaluate_chart,
    hypersurface_residuals,
    pmc_check,
    quantity_audit,
    split_residuals,
    tau2_direct,
)
from .scan import FamilySpec, ScanResult, ScanError, sweep, veronese_radius_scan

__all__ = [
    "__version__",
    "Jet", "JetError", "JetDomainError", "seed_variable", "elementary", "variables",
    "parse", "to_string", "ExprSyntaxError",
    "ChartSpec", "ChartError", "parse_chart", "parse_chart_file", "catalog_chart",
    "catalog_entries", "eval_jet", "eval_real", "sample_points", "perturbed_chart",
    "PointGeometry", "IntrinsicCurvature", "GeometryError", "compute_geometry",
    "intrinsic_curvature", "gauss_ricci_check", "nabla_A_symmetry_check",
    "ResidualReport", "PMCBlock", "AllSamplesFailed", "evaluate_chart",
    "tau2_direct", "split_residuals", "hypersurface_residuals", "pmc_check",
    "quantity_audit",
    "FamilySpec", "ScanResult", "ScanError", "sweep", "veronese_radius_scan",
]
