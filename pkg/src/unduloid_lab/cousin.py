"""Conjugate cousin of the upper half patch, cousin Jacobi fields, boundary classification.

The cousin f~ : M+ -> S^3 solves the first-order system

    d_t f~ = f~ f_phi,     d_phi f~ = -f~ f_t,

(df~ = f~ df o J with J d_t = d_phi), which is integrable exactly when H = 1.
A field W along f~ is moved back to M+ by the transplant Wbar = f~^{-1} W.
For a Killing field V on R^3 the cousin field V~ = f~ Y solves, in transplant
form,

    d_t Y = 2 Y x f_phi + d_phi V,      d_phi Y = -2 Y x f_t - d_t V.

Boundary curves of the half patch are the rows phi = 0 and phi = pi, lying in
the mirror plane {z = 0}; "vertical" means parallel to k.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import quat
from .delaunay import UnduloidPatch
from .errors import NumericalFailure, ParameterError
from .fd import diff
from .quat import K, KillingField, as_quat, im, qconj, qexp, qmul, qnormalize, rotate

GAUSS = (0.5 - np.sqrt(3.0) / 6.0, 0.5 + np.sqrt(3.0) / 6.0)
HOLONOMY_TOL = 1e-6
TANGENCY_TOL = 1e-10
CLASSIFY_THRESHOLD = 1e-4


# ---------------------------------------------------------------------------
# the cousin patch


@dataclass
class CousinPatch:
    """Cousin f~ on the grid of a half patch; ``gauge`` is f~ at the anchor node."""

    patch: UnduloidPatch
    ft: np.ndarray
    anchor: tuple
    gauge: np.ndarray
    holonomy: np.ndarray
    scheme: str
    substeps: int

    @property
    def nu_tilde(self):
        return qmul(self.ft, as_quat(self.patch.nu))

    @property
    def max_holonomy(self) -> float:
        return float(self.holonomy.max()) if self.holonomy.size else 0.0

    def left_translate(self, q) -> "CousinPatch":
        """Gauge change f~ -> q f~."""
        q = qnormalize(q)
        return replace(self, ft=qmul(q, self.ft), gauge=qmul(q, self.gauge))

    def hopf(self, u=K):
        return quat.hopf_project(self.ft, u)


def _magnus_step(A1, A2, h):
    """One fourth-order Magnus step for Y' = Y A(s) (A imaginary, Gauss nodes)."""
    omega = 0.5 * h * (A1 + A2) + (np.sqrt(3.0) / 6.0) * h * h * np.cross(A1, A2)
    return qexp(omega)


def _edge_propagators(patch: UnduloidPatch, scheme: str, substeps: int):
    """Transfer quaternions along t-edges (n_t-1, n_phi) and phi-edges (n_t, n_phi-1)."""
    t, phi = patch.t, patch.phi
    frame = patch.frame

    def propagate(lo, step, sample):
        # sample(s) -> A at parameter offsets s (array broadcast against the edge set)
        h = step / substeps
        P = None
        for k in range(substeps):
            if scheme == "magnus4":
                A1 = sample(lo + (k + GAUSS[0]) * h)
                A2 = sample(lo + (k + GAUSS[1]) * h)
                E = _magnus_step(A1, A2, h)
            else:
                E = qexp(h * sample(lo + (k + 0.5) * h))
            P = E if P is None else qmul(P, E)
        return P

    Pt = propagate(t[:-1, None], patch.h_t,
                   lambda s: frame(s, phi[None, :])[2])
    Pp = propagate(phi[None, :-1], patch.h_phi,
                   lambda s: -frame(t[:, None], s)[1])
    return qnormalize(Pt), qnormalize(Pp)


def integrate_cousin(patch: UnduloidPatch, scheme: str = "magnus4", substeps: int = 1,
                     holonomy_tol: float = HOLONOMY_TOL) -> CousinPatch:
    """Integrate df~ = f~ df o J from the anchor node with f~(anchor) = 1.

    Values are carried along the anchor's boundary row in t, then along every
    phi-line; each edge is an exact exponential step, so f~ stays on S^3.
    ``scheme`` is "magnus4" (Gauss two-point Magnus) or "midpoint".
    """
    if not patch.half:
        raise ParameterError("the cousin is integrated on the upper half patch only")
    if scheme not in ("magnus4", "midpoint"):
        raise ParameterError(f"unknown scheme {scheme!r}")
    if substeps < 1:
        raise ParameterError("substeps must be >= 1")
    nk = np.sum(patch.nu[:, 1:-1] * K, -1)
    if np.any(nk >= 0):
        raise ParameterError("graph condition <nu, k> < 0 fails on the interior")
    Pt, Pp = _edge_propagators(patch, scheme, substeps)
    n_t, n_phi = patch.shape
    i0, j0 = patch.anchor
    ft = np.zeros((n_t, n_phi, 4))
    ft[i0, j0] = quat.ONE
    for i in range(i0 + 1, n_t):
        ft[i, 0] = qnormalize(qmul(ft[i - 1, 0], Pt[i - 1, 0]))
    for i in range(i0 - 1, -1, -1):
        ft[i, 0] = qnormalize(qmul(ft[i + 1, 0], qconj(Pt[i, 0])))
    for j in range(n_phi - 1):
        ft[:, j + 1] = qnormalize(qmul(ft[:, j], Pp[:, j]))
    # plaquette holonomy: the two paths around each cell
    lower = qmul(Pt[:, :-1], Pp[1:])
    upper = qmul(Pp[:-1], Pt[:, 1:])
    hol = np.linalg.norm(lower - upper, axis=-1)
    worst = float(hol.max())
    if worst > holonomy_tol:
        i, j = np.unravel_index(int(np.argmax(hol)), hol.shape)
        raise NumericalFailure(f"plaquette holonomy {worst:.3e} at cell ({i}, {j}) "
                               f"exceeds {holonomy_tol:.1e}")
    return CousinPatch(patch=patch, ft=ft, anchor=(i0, j0), gauge=quat.ONE.copy(),
                       holonomy=hol, scheme=scheme, substeps=substeps)


def helicoid_cousin(patch: UnduloidPatch, a: float) -> np.ndarray:
    """Closed-form cousin of a surface of revolution in the anchor gauge.

    f~(t, phi) = e^{(1/2 - a) phi i} e^{s(t) k} e^{-phi i / 2}, with s the
    arclength from the neck (a = n / 2 pi; a = 0 on the sphere), left-translated
    so that f~(anchor) = 1.  Valid for the unrotated patch.
    """
    s = patch.profile.evaluate(patch.t)[3]
    s0 = patch.profile.evaluate(patch.t[patch.anchor[0]])[3]
    phi = patch.phi
    A = qexp((0.5 - a) * phi[None, :, None] * quat.I)
    B = qexp(s[:, None, None] * K)
    C = qexp(-0.5 * phi[None, :, None] * quat.I)
    return qmul(qexp(-s0 * K), qmul(qmul(A, B), C))


def _derivs(values, patch, order):
    return (diff(values, patch.h_t, axis=0, order=order),
            diff(values, patch.h_phi, axis=1, order=order))


def verify_cousin(cousin: CousinPatch, patch: Optional[UnduloidPatch] = None, order: int = 6) -> dict:
    """Report-only geometric checks of a cousin patch (all left-invariant)."""
    patch = cousin.patch if patch is None else patch
    if patch.shape != cousin.patch.shape:
        raise ParameterError("grid mismatch between cousin and patch")
    F = cousin.ft
    r = patch.rho[:, None]
    Ft, Fp = _derivs(F, patch, order)
    # isometry: |d f~| = |d f| = rho, and orthogonality
    iso = (np.abs(np.linalg.norm(Ft, axis=-1) - r) + np.abs(np.linalg.norm(Fp, axis=-1) - r)
           + np.abs(np.sum(Ft * Fp, -1)) / r) / r
    nt = cousin.nu_tilde
    normal = np.maximum.reduce([np.abs(np.sum(nt * Ft, -1)) / r, np.abs(np.sum(nt * Fp, -1)) / r,
                                np.abs(np.sum(nt * F, -1)), np.abs(np.linalg.norm(nt, axis=-1) - 1)])
    Ftt = diff(F, patch.h_t, axis=0, deriv=2, order=order)
    Fpp = diff(F, patch.h_phi, axis=1, deriv=2, order=order)
    # the S^3 mean curvature is the normal part of the ambient Laplacian
    Hc = np.sum((Ftt + Fpp) * nt, -1) / (2.0 * r**2)
    w = (2 + order - 1) // 2
    fk = qmul(F, as_quat(K))
    trans = np.sum(nt * fk, -1)
    nk = np.sum(patch.nu * K, -1)
    interior = trans[:, 1:-1]
    return {
        "isometry_defect": float(iso.max()),
        "mean_curvature_max": float(np.abs(Hc[w:-w, w:-w]).max()),
        "normal_relation_defect": float(normal.max()),
        "transversality_defect": float(np.abs(trans - nk).max()),
        "transversality_margin": float(interior.max()),
        "holonomy_max": cousin.max_holonomy,
    }


def boundary_hopf(cousin: CousinPatch, u=K):
    """Per boundary row: mean of Pi_u(f~) (normalized) and its spread."""
    P = cousin.hopf(u)
    out = []
    for j in cousin.patch.boundary_rows():
        row = P[:, j]
        m = row.mean(axis=0)
        m = m / np.linalg.norm(m)
        spread = float(np.max(np.linalg.norm(row - m, axis=-1)))
        out.append((m, spread))
    return out


# ---------------------------------------------------------------------------
# fields


@dataclass
class FieldOnPatch:
    """Per-node field.  ``where`` is "M+" (R^3 values, including transplants) or
    "cousin" (quaternion values tangent to S^3 along f~)."""

    values: np.ndarray
    where: str
    label: str = ""

    def __post_init__(self):
        if self.where not in ("M+", "cousin"):
            raise ParameterError(f"unknown field location {self.where!r}")
        want = 3 if self.where == "M+" else 4
        if self.values.shape[-1] != want:
            raise ParameterError(f"{self.where} fields have {want} components")


def killing_on_patch(V: KillingField, patch: UnduloidPatch) -> FieldOnPatch:
    return FieldOnPatch(V(patch.f), "M+", f"{V.kind}:{V.axis}")


def killing_on_cousin(W: KillingField, cousin: CousinPatch) -> FieldOnPatch:
    return FieldOnPatch(W(cousin.ft), "cousin", f"{W.kind}:{W.axis}")


def transplant(W: FieldOnPatch, cousin: CousinPatch, tol: float = TANGENCY_TOL) -> FieldOnPatch:
    """Wbar = f~^{-1} W, an R^3-valued field on M+."""
    if W.where != "cousin":
        raise ParameterError("transplant expects a field along the cousin")
    Y = qmul(qconj(cousin.ft), W.values)
    scale = max(1.0, float(np.abs(W.values).max()))
    if np.abs(Y[..., 0]).max() > tol * scale:
        raise ParameterError("field is not tangent to S^3 along the cousin")
    return FieldOnPatch(im(Y), "M+", W.label)


def untransplant(Y: FieldOnPatch, cousin: CousinPatch) -> FieldOnPatch:
    return FieldOnPatch(qmul(cousin.ft, as_quat(Y.values)), "cousin", Y.label)


def _vec_mul(a, b):
    """Quaternion product of two imaginary vectors."""
    return qmul(as_quat(a), as_quat(b))


def left_killing_residual(W: FieldOnPatch, cousin: CousinPatch, order: int = 6) -> float:
    """max |f~^{-1} dW - (dWbar + (df o J) Wbar)| over both grid directions, per unit rho."""
    patch = cousin.patch
    Y = transplant(W, cousin).values
    Wt, Wp = _derivs(W.values, patch, order)
    Yt, Yp = _derivs(Y, patch, order)
    inv = qconj(cousin.ft)
    rt = qmul(inv, Wt) - (as_quat(Yt) + _vec_mul(patch.f_phi, Y))
    rp = qmul(inv, Wp) - (as_quat(Yp) - _vec_mul(patch.f_t, Y))
    r = patch.rho[:, None]
    return float(max((np.linalg.norm(rt, axis=-1) / r).max(), (np.linalg.norm(rp, axis=-1) / r).max()))


def rotation_identity_residual(cousin: CousinPatch, patch: Optional[UnduloidPatch] = None, u=quat.I, order: int = 6) -> float:
    """max residual of 2 df x lbar_u - dlbar_u o J = 0 on d_t and d_phi, per unit rho."""
    patch = cousin.patch if patch is None else patch
    L = rotate(qconj(cousin.ft), np.asarray(u, dtype=float))
    Lt, Lp = _derivs(L, patch, order)
    rt = 2 * np.cross(patch.f_t, L) - Lp
    rp = 2 * np.cross(patch.f_phi, L) + Lt
    r = patch.rho[:, None]
    return float(max((np.linalg.norm(rt, axis=-1) / r).max(), (np.linalg.norm(rp, axis=-1) / r).max()))


def _killing_dV(V: KillingField, dfs):
    """Differential of a Killing field of R^3 along the given df values."""
    if V.kind == "translation":
        return np.zeros_like(dfs)
    if V.kind == "rotation":
        return -2.0 * np.cross(V.u, dfs)
    raise ParameterError("cousin fields are computed for translations and rotations of R^3")


def closed_form_cousin(V: KillingField, cousin: CousinPatch) -> FieldOnPatch:
    """tau_u -> 0, rho_u -> r_u."""
    if V.kind == "translation":
        return FieldOnPatch(np.zeros(cousin.ft.shape), "cousin", "0")
    if V.kind == "rotation":
        return killing_on_cousin(KillingField("right", V.axis), cousin)
    raise ParameterError("V must be a translation or a rotation of R^3")


def _rk4_edges(Y0, rhs, lo, step, substeps):
    """RK4 along parallel edges; rhs(s, Y) with s broadcast against Y's leading axis."""
    h = step / substeps
    Y = Y0
    s = lo
    for _ in range(substeps):
        k1 = rhs(s, Y)
        k2 = rhs(s + 0.5 * h, Y + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h, Y + 0.5 * h * k2)
        k4 = rhs(s + h, Y + h * k3)
        Y = Y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        s = s + h
    return Y


def integrate_cousin_field(V: KillingField, cousin: CousinPatch, y0=None, substeps: int = 2) -> FieldOnPatch:
    """Integrate the transplant form of the cousin-field equation for Killing data.

    ``y0`` is the transplant at the anchor; by default the closed-form value
    there.  Returns the cousin field V~ = f~ Y.
    """
    patch = cousin.patch
    frame = patch.frame
    i0, j0 = cousin.anchor
    if y0 is None:
        y0 = transplant(closed_form_cousin(V, cousin), cousin).values[i0, j0]
    y0 = np.asarray(y0, dtype=float)

    def rhs_t(phi_j):
        def rhs(s, Y):
            _, ft, fp, _ = frame(s, phi_j)
            return 2 * np.cross(Y, fp) + _killing_dV(V, fp)
        return rhs

    def rhs_p(t_col):
        def rhs(s, Y):
            _, ft, fp, _ = frame(t_col, s)
            return -2 * np.cross(Y, ft) - _killing_dV(V, ft)
        return rhs

    n_t, n_phi = patch.shape
    Y = np.zeros((n_t, n_phi, 3))
    Y[i0, j0] = y0
    t, phi = patch.t, patch.phi
    row = rhs_t(phi[0])
    for i in range(i0 + 1, n_t):
        Y[i, 0] = _rk4_edges(Y[i - 1, 0], row, t[i - 1], patch.h_t, substeps)
    for i in range(i0 - 1, -1, -1):
        Y[i, 0] = _rk4_edges(Y[i + 1, 0], row, t[i + 1], -patch.h_t, substeps)
    col = rhs_p(t)
    for j in range(n_phi - 1):
        Y[:, j + 1] = _rk4_edges(Y[:, j], col, phi[j], patch.h_phi, substeps)
    return untransplant(FieldOnPatch(Y, "M+", f"{V.kind}:{V.axis}"), cousin)


def fit_left_translation(W1: FieldOnPatch, W2: FieldOnPatch, cousin: CousinPatch):
    """Least-squares w with W1 - W2 = l_w; returns (w, max residual)."""
    D = qmul(qconj(cousin.ft), W1.values - W2.values)
    D = im(D)
    # Dbar = f~^{-1} w f~, so f~ Dbar f~^{-1} estimates w at every node
    est = rotate(cousin.ft, D)
    w = est.reshape(-1, 3).mean(axis=0)
    res = D - rotate(qconj(cousin.ft), w)
    return w, float(np.linalg.norm(res, axis=-1).max())


@dataclass
class CousinFieldResult:
    integrated: FieldOnPatch
    closed_form: FieldOnPatch
    w: np.ndarray
    discrepancy: float
    cousin_field_residual: float


def cousin_field_residual(W: FieldOnPatch, V: KillingField, cousin: CousinPatch, order: int = 6) -> float:
    """Finite-difference residual of the cousin-field equation (transplant form), per unit rho."""
    patch = cousin.patch
    Y = transplant(W, cousin).values
    Yt, Yp = _derivs(Y, patch, order)
    rt = Yt - (2 * np.cross(Y, patch.f_phi) + _killing_dV(V, patch.f_phi))
    rp = Yp - (-2 * np.cross(Y, patch.f_t) - _killing_dV(V, patch.f_t))
    r = patch.rho[:, None]
    return float(max((np.linalg.norm(rt, axis=-1) / r).max(), (np.linalg.norm(rp, axis=-1) / r).max()))


def cousin_field(V: KillingField, patch: UnduloidPatch, cousin: CousinPatch, y0=None,
                 substeps: int = 2, tol: float = 1e-6) -> CousinFieldResult:
    """Closed-form and integrated cousin of a Killing field, with their discrepancy.

    The discrepancy is measured after fitting the left translation that the
    equation leaves free (nonzero only when ``y0`` differs from the closed form).
    """
    if patch.shape != cousin.patch.shape:
        raise ParameterError("grid mismatch between cousin and patch")
    closed = closed_form_cousin(V, cousin)
    integ = integrate_cousin_field(V, cousin, y0=y0, substeps=substeps)
    w, disc = fit_left_translation(integ, closed, cousin)
    if disc > tol:
        raise NumericalFailure(f"cousin field discrepancy {disc:.3e} exceeds {tol:.1e}")
    return CousinFieldResult(integrated=integ, closed_form=closed, w=w, discrepancy=disc,
                             cousin_field_residual=cousin_field_residual(integ, V, cousin))


def tangential_cousin(V_values, cousin: CousinPatch) -> FieldOnPatch:
    """f~ J(V) for a field tangent to M+."""
    return untransplant(FieldOnPatch(cousin.patch.J(V_values), "M+"), cousin)


# ---------------------------------------------------------------------------
# boundary classification


def _hor(v):
    return v[..., :2]


def _vert(v):
    return v[..., 2]


@dataclass
class CurveVerdict:
    row: int
    verdict: str
    residuals: dict
    vector: Optional[np.ndarray]
    omega_residual: float


@dataclass
class BoundaryClassification:
    where: str
    curves: list
    scale: float
    threshold: float

    @property
    def verdicts(self):
        return [c.verdict for c in self.curves]

    def vectors(self):
        return [c.vector for c in self.curves]


def _row_data(Y, patch, j, order):
    Yp = diff(Y, patch.h_phi, axis=1, order=order)
    Yt = diff(Y, patch.h_t, axis=0, order=order)
    r = patch.rho[:, None]
    return Y[:, j], (Yp[:, j] / r), (Yt[:, j] / r)


def classify_boundary(field: FieldOnPatch, cousin: CousinPatch, threshold: float = CLASSIFY_THRESHOLD,
                      order: int = 4) -> BoundaryClassification:
    """Even / odd / almost even / almost odd verdict per boundary curve.

    On M+ the test order is even, odd, almost even; on the cousin it is odd,
    almost odd, even.  A curve passes a test when the fit residual is at most
    ``threshold`` times the field scale.
    """
    patch = cousin.patch
    rows = patch.boundary_rows()
    on_cousin = field.where == "cousin"
    Y = transplant(field, cousin).values if on_cousin else field.values
    Yp_all = diff(Y, patch.h_phi, axis=1, order=order)
    r = patch.rho[:, None]
    scale = max(float(np.linalg.norm(Y, axis=-1).max()),
                float(np.linalg.norm(Yp_all[:, rows] / r[..., None], axis=-1).max()), 1e-300)
    tol = threshold * scale
    if on_cousin:
        basis = [rotate(qconj(cousin.ft), e) for e in (quat.I, quat.J, K)]
        basis_p = [diff(L, patch.h_phi, axis=1, order=order) for L in basis]
        hopf = boundary_hopf(cousin)
    curves = []
    for idx, j in enumerate(rows):
        y, dn, dt = _row_data(Y, patch, j, order)
        res = {
            "even": float(max(np.abs(_vert(y)).max(), np.linalg.norm(_hor(dn), axis=-1).max())),
            "odd": float(max(np.linalg.norm(_hor(y), axis=-1).max(), np.abs(_vert(dn)).max())),
        }
        vector = None
        if not on_cousin:
            v = float(_vert(y).mean())
            res["almost_even"] = float(max(np.abs(_vert(y) - v).max(),
                                           np.linalg.norm(_hor(dn), axis=-1).max()))
            # dV is horizontal on d_t and vertical on d_n
            omega = max(np.abs(_vert(dt)).max(), np.linalg.norm(_hor(dn), axis=-1).max())
            order_ = ("even", "odd", "almost_even")
            vec_almost = v * K
        else:
            vi = hopf[idx][0]
            e1 = np.cross(vi, K if abs(vi[2]) < 0.9 else quat.I)
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(vi, e1)
            cols = []
            for e in (e1, e2):
                L = sum(c * b for c, b in zip(e, basis))[:, j]
                Lp = sum(c * b for c, b in zip(e, basis_p))[:, j] / patch.rho[:, None]
                cols.append(np.concatenate([_hor(L).ravel(), _vert(Lp)]))
            A = np.stack(cols, axis=1)
            rhs = np.concatenate([_hor(y).ravel(), _vert(dn)])
            coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            res["almost_odd"] = float(np.abs(A @ coef - rhs).max())
            vec_almost = coef[0] * e1 + coef[1] * e2
            # omega = 2 df x Ybar - dYbar o J: horizontal on d_t, vertical on d_n
            om_t = 2 * np.cross(patch.f_t[:, j], y) / patch.rho[:, None] - dn
            om_n = 2 * np.cross(patch.f_phi[:, j], y) / patch.rho[:, None] + dt
            omega = max(np.abs(_vert(om_t)).max(), np.linalg.norm(_hor(om_n), axis=-1).max())
            order_ = ("odd", "almost_odd", "even")
        verdict = "none"
        for name in order_:
            if res[name] <= tol:
                verdict = name.replace("_", "-")
                break
        if verdict == "odd" and on_cousin:
            vector = np.zeros(3)
        elif verdict == "even" and not on_cousin:
            vector = np.zeros(3)
        elif verdict.startswith("almost"):
            vector = vec_almost
        curves.append(CurveVerdict(row=j, verdict=verdict, residuals=res, vector=vector,
                                   omega_residual=float(omega)))
    return BoundaryClassification(where=field.where, curves=curves, scale=scale, threshold=threshold)


def even_odd_decompose(V, patch: UnduloidPatch):
    """V+- = (V(p) +- sigma V(sigma p)) / 2 for the mirror sigma(x, y, z) = (x, y, -z)."""
    if patch.half:
        raise ParameterError("decomposition needs the full patch")
    n_phi = len(patch.phi)
    if not np.allclose(patch.phi, 2 * np.pi * np.arange(n_phi) / n_phi, atol=1e-14):
        raise ParameterError("phi grid is not mirror symmetric")
    if patch.translation is not None and abs(patch.translation[2]) > 0:
        raise ParameterError("patch is translated off the mirror plane")
    if patch.rotation is not None and np.linalg.norm(patch.rotation[1:3]) > 1e-14:
        raise ParameterError("patch is rotated off the mirror plane")
    V = np.asarray(V, dtype=float)
    if V.shape != patch.f.shape:
        raise ParameterError("field shape does not match the patch")
    mirror = np.array([1.0, 1.0, -1.0])
    reflected = V[:, (-np.arange(n_phi)) % n_phi] * mirror
    plus = 0.5 * (V + reflected)
    return plus, V - plus
