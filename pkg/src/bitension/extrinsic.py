"""Extrinsic geometry of a chart at a point, from order-4 jets.

Everything is realized as ambient-vector arithmetic on jets.  The sphere
connection of the unit sphere is the Euclidean derivative plus a radial
correction, nabla^S_X Y = D_X Y + <X,Y> phi, so covariant derivatives in the
pull-back bundle and in the normal bundle reduce to jet differentiation plus
projections; no intrinsic index bookkeeping ever touches the normal bundle.

Sign conventions: Laplacians are Delta = -trace nabla^2, and curvature is
R(X,Y) = [nabla_X, nabla_Y] - nabla_{[X,Y]}, under which the unit sphere has
R(X,Y)Z = <Y,Z>X - <X,Z>Y and positive Ricci.  The reported Riemann array
uses the index convention with R[i,j,i,j] equal to the sectional curvature
of the (e_i, e_j) plane.

The second fundamental form in coordinates is

    B_ij = d2phi_ij + g_ij phi - Gamma^k_ij dphi_k ,

an ambient vector automatically orthogonal to phi and to the tangent space;
H = (1/m) g^ij B_ij.  Jets of B to order 2 support the two extra covariant
derivatives needed for Delta H, Delta-perp H and Delta f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import chart as chart_mod
from . import jets

COND_LIMIT = 1e10


class GeometryError(ValueError):
    """Geometric computation failed at a sample point."""


# ---------------------------------------------------------------------------
# jet-matrix helpers
# ---------------------------------------------------------------------------


def _jet_matmul(sp: jets.JetSpace, A: np.ndarray, B: np.ndarray, order: int) -> np.ndarray:
    """(m, m, L) jet-ring matrix product."""
    m = A.shape[0]
    Bt = B.transpose(1, 0, 2)
    out = sp.zeros(m, m)
    for i in range(m):
        for j in range(m):
            out[i, j] = sp.dot(A[i], Bt[j], order)
    return out


def _jet_mat_inv(sp: jets.JetSpace, gJ: np.ndarray, g0inv: np.ndarray, order: int) -> np.ndarray:
    """Inverse of a jet-valued matrix by Newton iteration from the value inverse.

    The residual I - X g starts at degree >= 1, so three iterations are exact
    past the truncation order while also polishing the float value part.
    """
    m = gJ.shape[0]
    X = sp.zeros(m, m)
    X[:, :, 0] = g0inv
    eye2 = 2.0 * np.eye(m)
    for _ in range(3):
        T = -_jet_matmul(sp, gJ, X, order)
        T[:, :, 0] += eye2
        X = _jet_matmul(sp, X, T, order)
    return X


def _mgs(rows: np.ndarray, pivot: bool, tol: float = 1e-13):
    """Modified Gram-Schmidt on the rows; returns (frame, chosen row order)."""
    V = rows.astype(np.float64).copy()
    k = V.shape[0]
    frame = []
    order = []
    remaining = list(range(k))
    while remaining and len(frame) < k:
        norms = [np.linalg.norm(V[i]) for i in remaining]
        pick = int(np.argmax(norms)) if pivot else 0
        if norms[pick] < tol:
            break
        i = remaining.pop(pick)
        e = V[i] / np.linalg.norm(V[i])
        frame.append(e)
        order.append(i)
        for j in remaining:
            V[j] = V[j] - np.dot(V[j], e) * e
    return np.array(frame), order


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class PointGeometry:
    """All extrinsic data of one chart at one sample point.  Immutable value."""

    point: np.ndarray
    m: int
    n: int
    phi: np.ndarray                 # (n+1,)
    jac: np.ndarray                 # (m, n+1) rows dphi_i
    metric: np.ndarray              # (m, m)
    metric_inv: np.ndarray
    tangent_frame: np.ndarray       # (m, n+1) orthonormal rows
    frame_coeff: np.ndarray         # (m, m): e_a = sum_i frame_coeff[a, i] dphi_i
    normal_frame: np.ndarray        # (n - m, n+1) orthonormal rows
    B_coord: np.ndarray             # (m, m, n+1) ambient-valued B(d_i, d_j)
    B_frame: np.ndarray             # (n - m, m, m) <B(e_a, e_b), xi_x>
    A_H: np.ndarray                 # (m, m) <B(e_a, e_b), H>
    H: np.ndarray                   # (n+1,)
    H_norm: float
    H2: float
    B2: float
    AH2: float
    delta_H: np.ndarray             # (n+1,)
    delta_perp_H: np.ndarray        # (n+1,)
    nabla_perp_H: np.ndarray        # (m, n+1): P_N(d_j H)
    nabla_perp_H_norm: float
    grad_H2: np.ndarray             # (n+1,)
    trace_B_AH: np.ndarray          # (n+1,)
    trace_A_nablaH: np.ndarray      # (n+1,)
    # hypersurface-only fields (None when codimension > 1)
    f: float | None = None
    eta: np.ndarray | None = None
    A: np.ndarray | None = None     # (m, m) shape operator in the tangent frame
    A2: float | None = None
    grad_f: np.ndarray | None = None          # (n+1,)
    grad_f_coord: np.ndarray | None = None    # (m,)
    delta_f: float | None = None
    nabla_A: np.ndarray | None = None         # (m, m, m): <(grad A)(e_a,e_b), e_c>
    trace_nabla_A: np.ndarray | None = None   # (n+1,) ambient vector
    _ctx: dict = field(default_factory=dict, repr=False)

    @property
    def codim(self) -> int:
        return self.n - self.m

    @property
    def hypersurface(self) -> bool:
        return self.codim == 1

    @property
    def A_xi(self) -> np.ndarray:
        """Shape operator matrices per normal direction; in the orthonormal
        tangent frame these coincide with the B components along each normal,
        <A_xi e_a, e_b> = <B(e_a, e_b), xi>."""
        return self.B_frame


@dataclass
class IntrinsicCurvature:
    riemann: np.ndarray    # (m, m, m, m), R[i,j,i,j] = K(e_i, e_j)
    ricci: np.ndarray      # (m, m)
    scalar: float
    sectional: np.ndarray  # (m, m), zero diagonal


# ---------------------------------------------------------------------------
# main computation
# ---------------------------------------------------------------------------


def compute_geometry(spec: chart_mod.ChartSpec, point, flip_normal: bool = False) -> PointGeometry:
    """Full extrinsic package at one point.

    ``flip_normal`` negates the hypersurface unit normal; the paper fixes no
    orientation and every implemented check must be covariant under the flip
    (the test suite asserts this).
    """
    Phi, sp = chart_mod.eval_jet_stack(spec, point)
    m, n = spec.m, spec.n
    point = np.asarray(point, dtype=np.float64)

    phi0 = Phi[:, 0]
    if abs(np.linalg.norm(phi0) - 1.0) > 1e-8:
        raise GeometryError(
            f"chart does not land on the unit sphere (|phi| = {np.linalg.norm(phi0):.6g})"
        )

    dPhi = np.array([sp.deriv(Phi, i) for i in range(m)])          # order 3
    jac = dPhi[:, :, 0]

    gJ = sp.zeros(m, m)                                            # order 3
    for i in range(m):
        for j in range(i, m):
            gJ[i, j] = sp.dot(dPhi[i], dPhi[j], 3)
            gJ[j, i] = gJ[i, j]
    g0 = gJ[:, :, 0]

    eig = np.linalg.eigvalsh(g0)
    if eig[0] <= spec.rank_tol * eig[-1]:
        raise GeometryError(
            f"rank-deficient differential (metric eigenvalues {eig[0]:.3e}..{eig[-1]:.3e})"
        )
    if eig[-1] > COND_LIMIT * eig[0]:
        raise GeometryError(
            f"ill-conditioned metric (condition number {eig[-1] / eig[0]:.3e})"
        )
    cho = np.linalg.cholesky(g0)
    g0inv = np.linalg.inv(cho.T) @ np.linalg.inv(cho)
    ginvJ = _jet_mat_inv(sp, gJ, g0inv, 3)
    ginv0 = ginvJ[:, :, 0]

    # Christoffel symbols Gamma^k_ij, jets to order 2
    dgJ = np.array([sp.deriv(gJ, a) for a in range(m)])            # dg[a, b, c]
    GamJ = sp.zeros(m, m, m)
    for i in range(m):
        for j in range(i, m):
            C = dgJ[i, :, j] + dgJ[j, :, i] - dgJ[:, i, j]         # (m, L) index l
            for k in range(m):
                GamJ[k, i, j] = 0.5 * sp.dot(ginvJ[k], C, 2)
                GamJ[k, j, i] = GamJ[k, i, j]
    Gam0 = GamJ[:, :, :, 0]

    # second fundamental form, ambient-valued, jets to order 2
    BJ = sp.zeros(m, m, n + 1)
    for i in range(m):
        d2 = np.array([sp.deriv(dPhi[i], j) for j in range(i, m)])
        for idx, j in enumerate(range(i, m)):
            val = d2[idx] + sp.mul(gJ[i, j], Phi, 2)
            for k in range(m):
                val = val - sp.mul(GamJ[k, i, j], dPhi[k], 2)
            BJ[i, j] = val
            BJ[j, i] = val
    B0 = BJ[:, :, :, 0]

    HJ = sp.zeros(n + 1)                                           # order 2
    for i in range(m):
        for j in range(m):
            HJ += sp.mul(ginvJ[i, j], BJ[i, j], 2)
    HJ /= m
    H0 = HJ[:, 0]
    H2J = sp.mul(HJ, HJ, 2).sum(axis=0)
    H2 = float(H2J[0])
    H_norm = math.sqrt(max(H2, 0.0))

    # frames
    tangent_frame, _ = _mgs(jac, pivot=True)
    if tangent_frame.shape[0] != m:
        raise GeometryError("tangent frame construction failed")
    E = (tangent_frame @ jac.T) @ ginv0                            # e_a = E[a,i] dphi_i

    span = np.vstack([phi0 / np.linalg.norm(phi0), tangent_frame])
    cand = np.eye(n + 1) - span.T @ (span @ np.eye(n + 1))
    codim = n - m
    normal_rows = []
    work = cand.copy()
    for _ in range(codim):
        pick = int(np.argmax(np.linalg.norm(work, axis=1)))
        v = work[pick]
        nv = np.linalg.norm(v)
        if nv < 1e-10:
            raise GeometryError("normal frame construction failed (degenerate complement)")
        e = v / nv
        normal_rows.append(e)
        work = work - np.outer(work @ e, e)
    normal_frame = np.array(normal_rows)

    # covariant derivatives of H in the pull-back bundle: W_j = nabla_j H
    WJ = sp.zeros(m, n + 1)                                        # order 1
    for j in range(m):
        hdp = sp.dot(HJ, dPhi[j], 2)                               # <H, dphi_j>
        WJ[j] = sp.deriv(HJ, j) + sp.mul(hdp, Phi, 1)
    W0 = WJ[:, :, 0]

    ddH = np.empty((m, m, n + 1))
    for i in range(m):
        for j in range(m):
            ddH[i, j] = sp.deriv(WJ[j], i)[:, 0] + np.dot(W0[j], jac[i]) * phi0
    delta_H = -np.einsum("ij,ijc->c", ginv0, ddH) + np.einsum(
        "ij,kij,kc->c", ginv0, Gam0, W0
    )

    # normal connection: U_j = P_N(d_j H), then the normal rough Laplacian
    def _project_jets(V: np.ndarray, order: int) -> np.ndarray:
        out = V - sp.mul(sp.dot(V, Phi, order), Phi, order)
        for k in range(m):
            c = sp.dot(V, dPhi[k], order)
            for l in range(m):
                out = out - sp.mul(sp.mul(ginvJ[k, l], c, order), dPhi[l], order)
        return out

    def _project_value(v: np.ndarray) -> np.ndarray:
        out = v - np.dot(v, phi0) * phi0
        coeffs = ginv0 @ (jac @ v)
        return out - coeffs @ jac

    UJ = sp.zeros(m, n + 1)                                        # order 1
    for j in range(m):
        UJ[j] = _project_jets(sp.deriv(HJ, j), 1)
    U0 = UJ[:, :, 0]
    nabla_perp_H_norm = math.sqrt(
        max(float(np.einsum("ij,ic,jc->", ginv0, U0, U0)), 0.0)
    )

    ddU = np.empty((m, m, n + 1))
    for i in range(m):
        for j in range(m):
            ddU[i, j] = _project_value(sp.deriv(UJ[j], i)[:, 0])
    delta_perp_H = -np.einsum("ij,ijc->c", ginv0, ddU) + np.einsum(
        "ij,kij,kc->c", ginv0, Gam0, U0
    )

    grad_H2_coord = H2J[sp.var_pos]
    grad_H2 = np.einsum("ij,i,jc->c", ginv0, grad_H2_coord, jac)

    BH = np.einsum("ilc,c->il", B0, H0)
    trace_B_AH = np.einsum("ij,kl,il,jkc->c", ginv0, ginv0, BH, B0)
    trace_A_nablaH = np.einsum(
        "ij,kl,jlc,ic,kd->d", ginv0, ginv0, B0, U0, jac
    )

    B_frame = np.einsum("ai,bj,ijc,xc->xab", E, E, B0, normal_frame)
    A_H = np.einsum("ai,bj,ijc,c->ab", E, E, B0, H0)
    B2 = float(np.sum(B_frame * B_frame))
    AH2 = float(np.sum(A_H * A_H))

    geom = PointGeometry(
        point=point, m=m, n=n, phi=phi0, jac=jac, metric=g0, metric_inv=ginv0,
        tangent_frame=tangent_frame, frame_coeff=E, normal_frame=normal_frame,
        B_coord=B0, B_frame=B_frame, A_H=A_H, H=H0, H_norm=H_norm, H2=H2,
        B2=B2, AH2=AH2, delta_H=delta_H, delta_perp_H=delta_perp_H,
        nabla_perp_H=U0, nabla_perp_H_norm=nabla_perp_H_norm,
        grad_H2=grad_H2, trace_B_AH=trace_B_AH, trace_A_nablaH=trace_A_nablaH,
        _ctx={"space": sp, "GamJ": GamJ, "gJ": gJ, "ginvJ": ginvJ},
    )

    if codim == 1:
        _hypersurface_fields(geom, spec, Phi, dPhi, gJ, ginvJ, GamJ, BJ, HJ,
                             flip_normal)
    geom.B_frame.setflags(write=False)
    return geom


def _hypersurface_fields(geom, spec, Phi, dPhi, gJ, ginvJ, GamJ, BJ, HJ, flip_normal):
    """Unit normal as a jet, then f, grad f, Delta f and the cubic form grad A."""
    sp: jets.JetSpace = geom._ctx["space"]
    m, n = geom.m, geom.n
    eta0 = geom.normal_frame[0]

    # project the best-aligned constant ambient direction into the normal line
    c_star = int(np.argmax(np.abs(eta0)))
    NJ = sp.zeros(n + 1)
    NJ[c_star, 0] = 1.0
    NJ = NJ - sp.mul(Phi[c_star], Phi, 3)
    for k in range(m):
        for l in range(m):
            NJ = NJ - sp.mul(sp.mul(ginvJ[k, l], dPhi[k][c_star], 3), dPhi[l], 3)
    nn = sp.mul(NJ, NJ, 3).sum(axis=0)
    if nn[0] < 1e-16:
        raise GeometryError("normal frame construction failed (degenerate complement)")
    scale = jets.elementary("recip", jets.elementary("sqrt", jets.Jet(sp, nn, 3)))
    etaJ = sp.mul(NJ, scale.coeffs, 3)

    # orientation: point eta along H where H does not vanish, so f = <H, eta>
    # is nonnegative and comparable across samples; the paper fixes no
    # convention and every implemented check is covariant under the flip
    fJ = sp.mul(HJ, etaJ, 2).sum(axis=0)                           # order 2
    want_flip = fJ[0] < -1e-12
    if flip_normal:
        want_flip = not want_flip
    if want_flip:
        etaJ = -etaJ
        fJ = -fJ
    geom.normal_frame = etaJ[:, 0][None, :].copy()
    geom.eta = etaJ[:, 0].copy()
    # rebuild the frame-expressed tensors with the jet-consistent normal
    geom.B_frame = np.einsum(
        "ai,bj,ijc,xc->xab", geom.frame_coeff, geom.frame_coeff,
        geom.B_coord, geom.normal_frame,
    )
    geom.A = geom.B_frame[0]
    geom.A2 = float(np.sum(geom.A * geom.A))

    geom.f = float(fJ[0])
    df = fJ[sp.var_pos]
    geom.grad_f_coord = geom.metric_inv @ df
    geom.grad_f = geom.grad_f_coord @ geom.jac

    hess = np.empty((m, m))
    for i in range(m):
        dfi = sp.deriv(fJ, i)
        for j in range(m):
            hess[i, j] = sp.deriv(dfi, j)[0]
    Gam0 = GamJ[:, :, :, 0]
    geom.delta_f = float(
        -np.einsum("ij,ij->", geom.metric_inv, hess)
        + np.einsum("ij,kij,k->", geom.metric_inv, Gam0, df)
    )

    # shape operator as a (1,1)-tensor field: A^k_j = g^kl <B_lj, eta>
    AJ = sp.zeros(m, m)                                            # order 2
    for l in range(m):
        for j in range(m):
            p = sp.mul(BJ[l, j], etaJ, 2).sum(axis=0)
            for k in range(m):
                AJ[k, j] += sp.mul(ginvJ[k, l], p, 2)
    A0 = AJ[:, :, 0]
    nablaA = np.empty((m, m, m))                                   # [k, i, j]
    for k in range(m):
        for j in range(m):
            dA = np.array([sp.deriv(AJ[k, j], i)[0] for i in range(m)])
            nablaA[k, :, j] = dA
    nablaA += np.einsum("kil,lj->kij", Gam0, A0)
    nablaA -= np.einsum("lij,kl->kij", Gam0, A0)
    E = geom.frame_coeff
    geom.nabla_A = np.einsum("ai,bj,kij,kw,cw->abc", E, E, nablaA, geom.metric, E)
    geom.trace_nabla_A = np.einsum(
        "ij,kij,kc->c", geom.metric_inv, nablaA, geom.jac
    )


# ---------------------------------------------------------------------------
# intrinsic curvature and the identity checks
# ---------------------------------------------------------------------------


def intrinsic_curvature(geom: PointGeometry) -> IntrinsicCurvature:
    """Riemann, Ricci, scalar and sectional curvature in the tangent frame."""
    m = geom.m
    if m == 1:
        z = np.zeros((1, 1))
        return IntrinsicCurvature(np.zeros((1, 1, 1, 1)), z.copy(), 0.0, z.copy())
    sp: jets.JetSpace = geom._ctx["space"]
    GamJ = geom._ctx["GamJ"]
    Gam0 = GamJ[:, :, :, 0]
    dGam = np.empty((m, m, m, m))                                  # [i, l, j, k]
    for i in range(m):
        dGam[i] = sp.deriv(GamJ, i)[:, :, :, 0]                    # d_i Gamma^l_jk

    # R(d_i, d_j) d_k = opR[i,j,k,l] d_l
    opR = np.empty((m, m, m, m))
    for i in range(m):
        for j in range(m):
            for k in range(m):
                opR[i, j, k] = (
                    dGam[i, :, j, k]
                    - dGam[j, :, i, k]
                    + np.einsum("s,ls->l", Gam0[:, j, k], Gam0[:, i, :])
                    - np.einsum("s,ls->l", Gam0[:, i, k], Gam0[:, j, :])
                )
    Rm = np.einsum("ijkl,lw->ijkw", opR, geom.metric)              # <R(i,j)k, w>
    E = geom.frame_coeff
    R4f = np.einsum("ai,bj,ck,dw,ijkw->abcd", E, E, E, E, Rm)
    riemann = R4f.transpose(0, 1, 3, 2)                            # R[a,b,a,b] = K_ab
    ricci = np.einsum("cabc->ab", R4f)
    scalar = float(np.trace(ricci))
    sectional = np.einsum("abba->ab", R4f).copy()
    np.fill_diagonal(sectional, 0.0)
    return IntrinsicCurvature(riemann=riemann, ricci=ricci, scalar=scalar,
                              sectional=sectional)


def gauss_ricci_check(geom: PointGeometry) -> float:
    """Residual of the Gauss-equation Ricci identity for hypersurfaces:

    ricci(X,Y) = (m-1)<X,Y> + <A(X),Y> trace A - <A(X), A(Y)>.
    """
    if not geom.hypersurface:
        raise GeometryError("gauss_ricci_check requires a hypersurface (n = m + 1)")
    curv = intrinsic_curvature(geom)
    A = geom.A
    predicted = (
        (geom.m - 1) * np.eye(geom.m) + A * np.trace(A) - A @ A
    )
    return float(np.max(np.abs(curv.ricci - predicted)))


def nabla_A_symmetry_check(geom: PointGeometry) -> tuple[float, float]:
    """Total symmetry of <(grad A)(.,.),.> and trace(grad A) = m grad f."""
    if not geom.hypersurface:
        raise GeometryError("nabla_A_symmetry_check requires a hypersurface")
    S = geom.nabla_A
    sym = 0.0
    for perm in ((0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        sym = max(sym, float(np.max(np.abs(S - S.transpose(perm)))))
    trace_res = float(
        np.linalg.norm(geom.trace_nabla_A - geom.m * geom.grad_f)
    )
    return sym, trace_res
