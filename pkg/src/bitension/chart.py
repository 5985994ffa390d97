"""Parametric immersions into the unit sphere.

A chart is a map phi: U in R^m -> S^n in R^{n+1} given componentwise by
expression trees.  The built-in catalog covers the canonical proper
biharmonic families (small hyperspheres, products of spheres, the flat-torus
and Veronese parallel surfaces) plus products of equatorial spheres in
higher codimension; user charts come from a small JSON document format.

Catalog builders bake their numeric parameters into the component
expressions as literals.  That keeps the equator case r = 1 evaluable (the
constant last component sqrt(1 - r^2) = 0 never reaches the jet sqrt, whose
domain is positive reals) and makes every catalog chart a plain expression
chart, so the jet path and the finite-difference oracle path share exactly
one description of the map.

Coordinate singularities (spherical-coordinate poles) are handled by inset
sampling rather than atlas switching: all verification is pointwise, and
interior samples suffice.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import expr, jets

SINGULAR_MARGIN = 0.05
RANK_TOL = 1e-8
MAX_DOMAIN_DIM = 6
MAX_AMBIENT_DIM = 8

_TWO_PI = 2.0 * math.pi


class ChartError(ValueError):
    """Chart validation or evaluation failure."""


class ChartEvalError(ChartError):
    """Evaluation failed at a specific sample point."""

    def __init__(self, message: str, point):
        self.point = tuple(float(x) for x in point)
        super().__init__(f"{message} at point {self.point}")


class ChartSpec:
    """A validated parametric immersion.  Immutable after construction."""

    def __init__(
        self,
        name: str,
        m: int,
        n: int,
        components,
        domain,
        params: dict | None = None,
        normalize: bool = False,
        catalog: dict | None = None,
        singular_margin: float = SINGULAR_MARGIN,
        rank_tol: float = RANK_TOL,
    ):
        self.name = str(name)
        self.m = int(m)
        self.n = int(n)
        self.components = tuple(
            expr.parse(c) if isinstance(c, str) else c for c in components
        )
        self.domain = tuple((float(lo), float(hi)) for lo, hi in domain)
        self.params = {str(k): float(v) for k, v in (params or {}).items()}
        self.normalize = bool(normalize)
        self.catalog = catalog
        self.singular_margin = float(singular_margin)
        self.rank_tol = float(rank_tol)
        _validate(self)

    def __repr__(self) -> str:
        return f"ChartSpec({self.name!r}, m={self.m}, n={self.n})"

    def describe(self) -> dict:
        d = {"name": self.name, "m": self.m, "n": self.n,
             "normalize": self.normalize}
        if self.catalog:
            d["catalog"] = self.catalog
        if self.params:
            d["params"] = self.params
        return d


def _validate(spec: ChartSpec):
    if not 1 <= spec.m <= MAX_DOMAIN_DIM:
        raise ChartError(f"domain_dim m must be in 1..{MAX_DOMAIN_DIM}, got {spec.m}")
    if not spec.m < spec.n <= MAX_AMBIENT_DIM:
        raise ChartError(
            f"ambient_dim n must satisfy m < n <= {MAX_AMBIENT_DIM}, got n={spec.n}"
        )
    want = spec.n + 1
    if len(spec.components) != want:
        raise ChartError(
            f"expected {want} components, got {len(spec.components)}"
        )
    if len(spec.domain) != spec.m:
        raise ChartError(
            f"expected {spec.m} domain intervals, got {len(spec.domain)}"
        )
    for lo, hi in spec.domain:
        if not lo < hi:
            raise ChartError(f"empty domain interval [{lo}, {hi}]")
        if hi - lo <= 2 * spec.singular_margin:
            raise ChartError(
                f"domain interval [{lo}, {hi}] narrower than twice the "
                f"singular margin {spec.singular_margin}"
            )
    for c in spec.components:
        k = expr.max_var_index(c)
        if k >= spec.m:
            raise ChartError(
                f"expression uses u{k + 1} but the chart has {spec.m} variables"
            )
        unknown = expr.free_params(c) - set(spec.params)
        if unknown:
            raise ChartError(f"unknown parameter {sorted(unknown)[0]!r}")


# ---------------------------------------------------------------------------
# chart documents (JSON)
# ---------------------------------------------------------------------------


def parse_chart(doc: dict) -> ChartSpec:
    """Build a ChartSpec from a chart document (already JSON-decoded)."""
    if not isinstance(doc, dict):
        raise ChartError("chart document must be a JSON object")
    if "catalog" in doc:
        cat = doc["catalog"]
        if not isinstance(cat, dict) or "tag" not in cat:
            raise ChartError('"catalog" must be an object with a "tag" field')
        return catalog_chart(cat["tag"], cat.get("params", {}))
    for field in ("name", "m", "n", "expressions", "domain"):
        if field not in doc:
            raise ChartError(f"chart document missing field {field!r}")
    exprs = doc["expressions"]
    if not isinstance(exprs, list):
        raise ChartError('"expressions" must be an array of strings')
    try:
        components = [expr.parse(s) for s in exprs]
    except expr.ExprSyntaxError as e:
        raise ChartError(f"syntax error: {e}") from e
    return ChartSpec(
        name=doc["name"],
        m=doc["m"],
        n=doc["n"],
        components=components,
        domain=doc["domain"],
        params=doc.get("params", {}),
        normalize=doc.get("normalize", False),
    )


def parse_chart_file(path: str) -> ChartSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ChartError(f"cannot read chart file {path!r}: {e}") from e
    except json.JSONDecodeError as e:
        raise ChartError(f"chart file {path!r} is not valid JSON: {e}") from e
    return parse_chart(doc)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


def _sphere_comps(m: int, offset: int) -> list[str]:
    """Unit-sphere S^m components in spherical coordinates u{offset+1}.."""
    v = f"u{offset + 1}"
    if m == 1:
        return [f"cos({v})", f"sin({v})"]
    inner = _sphere_comps(m - 1, offset + 1)
    return [f"sin({v}) * {c}" for c in inner] + [f"cos({v})"]


def _sphere_domain(m: int) -> list[tuple[float, float]]:
    # last angle is azimuthal, the others are polar
    return [(0.0, math.pi)] * (m - 1) + [(0.0, _TWO_PI)]


def _scaled(scale: float, comps: list[str]) -> list[str]:
    return [f"{scale!r} * {c}" for c in comps]


def _int_param(params: dict, name: str, default: int | None = None):
    if name not in params:
        if default is not None:
            return default
        raise ChartError(f"missing catalog parameter {name!r}")
    v = float(params[name])
    k = int(round(v))
    if abs(v - k) > 1e-9:
        raise ChartError(f"parameter {name!r} must be an integer, got {v}")
    return k


def _float_param(params: dict, name: str):
    if name not in params:
        raise ChartError(f"missing catalog parameter {name!r}")
    return float(params[name])


def _build_small_hypersphere(params: dict) -> ChartSpec:
    m = _int_param(params, "m", default=2)
    r = _float_param(params, "r")
    if not 1 <= m <= MAX_DOMAIN_DIM:
        raise ChartError(f"small-hypersphere needs 1 <= m <= {MAX_DOMAIN_DIM}")
    if not 0.0 < r <= 1.0:
        raise ChartError(f"small-hypersphere radius must be in (0, 1], got {r}")
    comps = _scaled(r, _sphere_comps(m, 0)) + [repr(math.sqrt(max(1.0 - r * r, 0.0)))]
    return ChartSpec(
        name=f"small-hypersphere(m={m}, r={r:.10g})",
        m=m,
        n=m + 1,
        components=comps,
        domain=_sphere_domain(m),
        catalog={"tag": "small-hypersphere", "params": {"m": m, "r": r}},
    )


def _build_product_spheres(params: dict, tag: str = "product-spheres") -> ChartSpec:
    m1 = _int_param(params, "m1")
    m2 = _int_param(params, "m2")
    r1 = _float_param(params, "r1")
    r2 = _float_param(params, "r2")
    if m1 < 1 or m2 < 1 or m1 + m2 > MAX_DOMAIN_DIM:
        raise ChartError(
            f"factor dimensions must be >= 1 with m1 + m2 <= {MAX_DOMAIN_DIM}"
        )
    if not (0.0 < r1 < 1.0 and 0.0 < r2 < 1.0):
        raise ChartError("factor radii must lie in (0, 1)")
    if abs(r1 * r1 + r2 * r2 - 1.0) > 1e-9:
        raise ChartError(
            f"radii must satisfy r1^2 + r2^2 = 1 to land on the unit sphere, "
            f"got {r1 * r1 + r2 * r2:.12g}"
        )
    comps = _scaled(r1, _sphere_comps(m1, 0)) + _scaled(r2, _sphere_comps(m2, m1))
    domain = _sphere_domain(m1) + _sphere_domain(m2)
    m = m1 + m2
    return ChartSpec(
        name=f"{tag}(m1={m1}, m2={m2}, r1={r1:.10g}, r2={r2:.10g})",
        m=m,
        n=m + 1,
        components=comps,
        domain=domain,
        catalog={"tag": tag, "params": {"m1": m1, "m2": m2, "r1": r1, "r2": r2}},
    )


def _build_clifford_torus_b3(params: dict) -> ChartSpec:
    a = _float_param(params, "a")
    b = _float_param(params, "b")
    if a <= 0 or b <= 0:
        raise ChartError("torus radii must be positive")
    if a * a + b * b > 1.0 + 1e-12:
        raise ChartError(f"torus radii must satisfy a^2 + b^2 <= 1, got {a*a+b*b:.12g}")
    c = math.sqrt(max(1.0 - a * a - b * b, 0.0))
    comps = [
        f"{a!r} * cos(u1)",
        f"{a!r} * sin(u1)",
        f"{b!r} * cos(u2)",
        f"{b!r} * sin(u2)",
        repr(c),
    ]
    return ChartSpec(
        name=f"clifford-torus-b3(a={a:.10g}, b={b:.10g})",
        m=2,
        n=4,
        components=comps,
        domain=[(0.0, _TWO_PI), (0.0, _TWO_PI)],
        catalog={"tag": "clifford-torus-b3", "params": {"a": a, "b": b}},
    )


def _build_veronese(params: dict) -> ChartSpec:
    r = _float_param(params, "r")
    if not 0.0 < r <= 1.0:
        raise ChartError(f"veronese radius must be in (0, 1], got {r}")
    # spherical coordinates on the radius-sqrt(3) sphere:
    #   u = sqrt(3) sin(u1) cos(u2),  v = sqrt(3) sin(u1) sin(u2),
    #   w = sqrt(3) cos(u1),          u^2 + v^2 + w^2 = 3
    s3 = math.sqrt(3.0)
    comps = [
        f"{r * s3!r} * sin(u1) * sin(u2) * cos(u1)",          # v w / sqrt(3)
        f"{r * s3!r} * sin(u1) * cos(u2) * cos(u1)",          # u w / sqrt(3)
        f"{r * s3!r} * sin(u1)^2 * cos(u2) * sin(u2)",        # u v / sqrt(3)
        f"{r * s3 / 2.0!r} * sin(u1)^2 * (cos(u2)^2 - sin(u2)^2)",
        f"{r / 2.0!r} * (sin(u1)^2 - 2 * cos(u1)^2)",
        repr(math.sqrt(max(1.0 - r * r, 0.0))),
    ]
    return ChartSpec(
        name=f"veronese(r={r:.10g})",
        m=2,
        n=5,
        components=comps,
        domain=[(0.0, math.pi), (0.0, _TWO_PI)],
        catalog={"tag": "veronese", "params": {"r": r}},
    )


_CATALOG = {
    "small-hypersphere": {
        "build": _build_small_hypersphere,
        "params": "m (integer dimension, default 2), r in (0, 1]",
        "family_param": "r",
        "describe": "small hypersphere S^m(r) in S^{m+1}; proper biharmonic "
                    "at r = 1/sqrt(2), minimal equator at r = 1",
    },
    "product-spheres": {
        "build": _build_product_spheres,
        "params": "m1, m2 (integer dimensions), r1, r2 with r1^2 + r2^2 = 1",
        "family_param": "r",
        "describe": "S^{m1}(r1) x S^{m2}(r2) in S^{m1+m2+1}; proper biharmonic "
                    "at r1 = r2 = 1/sqrt(2) when m1 != m2",
    },
    "generalized-clifford": {
        "build": lambda p: _build_product_spheres(p, tag="generalized-clifford"),
        "params": "m1, m2 (integer dimensions), r1, r2 with r1^2 + r2^2 = 1",
        "family_param": "r",
        "describe": "product of equatorial spheres S^{m1}(r1) x S^{m2}(r2); "
                    "parallel mean curvature, |H| = |m1 - m2|/m at equal radii",
    },
    "clifford-torus-b3": {
        "build": _build_clifford_torus_b3,
        "params": "a, b > 0 with a^2 + b^2 <= 1",
        "family_param": "t",
        "describe": "flat torus (a cos u1, a sin u1, b cos u2, b sin u2, "
                    "sqrt(1 - a^2 - b^2)) in S^4; proper biharmonic on "
                    "a^2 + b^2 = 1/2",
    },
    "veronese": {
        "build": _build_veronese,
        "params": "r in (0, 1]",
        "family_param": "r",
        "describe": "constant-curvature surface r * (vw, uw, uv, ...)/sqrt(3) "
                    "in S^5; proper biharmonic at r = 1/sqrt(2), minimal at r = 1",
    },
}


def catalog_tags() -> list[str]:
    return list(_CATALOG)


def catalog_entries() -> list[dict]:
    return [
        {"tag": tag, "params": meta["params"], "describe": meta["describe"],
         "family_param": meta["family_param"]}
        for tag, meta in _CATALOG.items()
    ]


def catalog_chart(tag: str, params: dict) -> ChartSpec:
    meta = _CATALOG.get(tag)
    if meta is None:
        raise ChartError(
            f"unknown catalog tag {tag!r}; available: {', '.join(_CATALOG)}"
        )
    return meta["build"](dict(params))


def family_params(tag: str, param_name: str, value: float, fixed: dict) -> dict:
    """Parameter map for one member of a 1-parameter catalog family.

    Linked parameters keep the chart on the unit sphere: for the sphere
    products, sweeping ``r`` binds r1 = r and r2 = sqrt(1 - r^2); for the
    torus, sweeping ``t`` binds a = b = t.
    """
    params = dict(fixed)
    if tag in ("product-spheres", "generalized-clifford") and param_name == "r":
        if not 0.0 < value < 1.0:
            raise ChartError(f"family parameter r must be in (0, 1), got {value}")
        params["r1"] = value
        params["r2"] = math.sqrt(1.0 - value * value)
        return params
    if tag == "clifford-torus-b3" and param_name == "t":
        params["a"] = value
        params["b"] = value
        return params
    params[param_name] = value
    return params


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _check_margin(spec: ChartSpec, point):
    point = np.asarray(point, dtype=np.float64)
    if point.shape != (spec.m,):
        raise ChartError(f"expected a point with {spec.m} coordinates")
    slack = 1e-12
    for x, (lo, hi) in zip(point, spec.domain):
        if x < lo + spec.singular_margin - slack or x > hi - spec.singular_margin + slack:
            raise ChartEvalError(
                f"point outside the safe region (margin {spec.singular_margin})",
                point,
            )
    return point


def eval_jet_stack(spec: ChartSpec, point) -> tuple[np.ndarray, jets.JetSpace]:
    """Order-4 jets of all ambient components, stacked as an (n+1, L) array."""
    point = _check_margin(spec, point)
    sp = jets.space(spec.m)
    var_jets = [jets.seed_variable(i, point[i], spec.m) for i in range(spec.m)]
    memo: dict = {}
    rows = []
    try:
        for comp in spec.components:
            rows.append(expr.eval_jet(comp, var_jets, spec.params, memo).coeffs)
    except (jets.JetDomainError, expr.ExprEvalError) as e:
        raise ChartEvalError(f"chart evaluation failed: {e}", point) from e
    stack = np.array(rows)
    if spec.normalize:
        norm2 = sp.dot(stack, stack)
        if norm2[0] < 1e-12:
            raise ChartEvalError(
                f"cannot normalize near-zero vector (|phi| = {math.sqrt(max(norm2[0],0)):.3e})",
                point,
            )
        scale = jets.elementary(
            "recip", jets.elementary("sqrt", jets.Jet(sp, norm2))
        )
        stack = sp.mul(stack, scale.coeffs)
    return stack, sp


def eval_jet(spec: ChartSpec, point) -> list[jets.Jet]:
    stack, sp = eval_jet_stack(spec, point)
    return [jets.Jet(sp, row) for row in stack]


def eval_real(spec: ChartSpec, point, lib=math) -> list:
    """Plain numeric evaluation of phi; no jet machinery involved.

    Enforces only the domain box (finite-difference stencils may step closer
    to a face than the sampling margin).
    """
    slack = 1e-12
    for x, (lo, hi) in zip(point, spec.domain):
        if not lo - slack <= x <= hi + slack:
            raise ChartEvalError("point outside the domain box", point)
    try:
        vals = [expr.eval_real(c, point, spec.params, lib) for c in spec.components]
    except (expr.ExprEvalError, ValueError, ZeroDivisionError) as e:
        raise ChartEvalError(f"chart evaluation failed: {e}", point) from e
    if spec.normalize:
        norm = lib.sqrt(sum(v * v for v in vals))
        if norm < 1e-6:
            raise ChartEvalError("cannot normalize near-zero vector", point)
        vals = [v / norm for v in vals]
    return vals


_LATTICE_ALPHAS = np.array(
    [math.sqrt(p) % 1.0 for p in (2, 3, 5, 7, 11, 13)], dtype=np.float64
)


def sample_points(spec: ChartSpec, count: int, seed: int) -> np.ndarray:
    """Deterministic low-discrepancy points, inset from the box faces.

    A Kronecker lattice (irrational rotations by sqrt-prime fractions) with a
    seeded random offset: equidistributed, reproducible, and cheap.
    """
    if count <= 0:
        raise ChartError(f"sample count must be positive, got {count}")
    rng = np.random.default_rng(seed)
    offset = rng.random(spec.m)
    k = np.arange(count, dtype=np.float64)[:, None]
    frac = (offset[None, :] + k * _LATTICE_ALPHAS[None, : spec.m]) % 1.0
    pts = np.empty((count, spec.m))
    for i, (lo, hi) in enumerate(spec.domain):
        a = lo + spec.singular_margin
        b = hi - spec.singular_margin
        pts[:, i] = a + frac[:, i] * (b - a)
    return pts


# ---------------------------------------------------------------------------
# seeded perturbations (test harness charts)
# ---------------------------------------------------------------------------


def perturbed_chart(seed: int, base: str = "sphere", amplitude: float = 0.04) -> ChartSpec:
    """A random smooth perturbation of a catalog chart, radially renormalized.

    ``base='sphere'`` perturbs a small hypersphere S^2(r) in S^3 (a generic
    hypersurface); ``base='torus'`` perturbs the flat torus chart in S^4 (a
    generic codimension-2 immersion).  The perturbation is a low-frequency
    trigonometric polynomial, small enough to keep the immersion check
    comfortable on the inset domain.
    """
    rng = np.random.default_rng(seed)
    if base == "sphere":
        r = 0.6 + 0.3 * rng.random()
        comps = _scaled(r, _sphere_comps(2, 0)) + [repr(math.sqrt(1.0 - r * r))]
        domain = [(0.45, math.pi - 0.45), (0.3, _TWO_PI - 0.3)]
    elif base == "torus":
        a = 0.4 + 0.2 * rng.random()
        c = math.sqrt(1.0 - 2 * a * a)
        comps = [
            f"{a!r} * cos(u1)", f"{a!r} * sin(u1)",
            f"{a!r} * cos(u2)", f"{a!r} * sin(u2)", repr(c),
        ]
        domain = [(0.3, _TWO_PI - 0.3), (0.3, _TWO_PI - 0.3)]
    else:
        raise ChartError(f"unknown perturbation base {base!r}")

    def noise() -> str:
        terms = []
        for _ in range(2):
            c = amplitude * (0.3 + 0.7 * rng.random()) * (1 if rng.random() < 0.5 else -1)
            p = int(rng.integers(1, 3))
            q = int(rng.integers(1, 3))
            phase = _TWO_PI * rng.random()
            terms.append(
                f"{c!r} * sin({float(p)!r} * u1 + {float(q)!r} * u2 + {phase!r})"
            )
        return " + ".join(terms)

    comps = [f"{c} + {noise()}" for c in comps]
    return ChartSpec(
        name=f"perturbed-{base}-{seed}",
        m=2,
        n=len(comps) - 1,
        components=comps,
        domain=domain,
        normalize=True,
    )
