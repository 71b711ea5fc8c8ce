"""Classifying map at unduloid level: Hopf images of the cousin boundary curves.

For an unduloid the two boundary curves of the cousin of the upper half are
k-Hopf circles; their images v1, v2 in S^2 sit at spherical distance n.  The
necksize-change differential is computed two ways: by differencing the
classifying tuple along a family (dPhi) and by fitting the variation field on
the ends against the even asymptote basis (dA).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.transform import Rotation

from . import quat
from .cousin import (CousinPatch, FieldOnPatch, boundary_hopf, classify_boundary, cousin_field,
                     integrate_cousin)
from .delaunay import (NecksizeParams, UnduloidPatch, immerse, necksize_change_field, profile_for,
                       revolution_frame)
from .errors import ContractViolation, NumericalFailure, ParameterError
from .quat import KillingField, qconj, qmul

SPREAD_TOL = 1e-5
GRAM_COND_MAX = 1e10


@dataclass(frozen=True)
class KPointTuple:
    """Ordered points of S^2; consecutive points distinct, not (p, q, ..., p, q) for k >= 3."""

    points: np.ndarray

    def __post_init__(self):
        P = np.array(self.points, dtype=float)
        if P.ndim != 2 or P.shape[1] != 3 or len(P) < 2:
            raise ParameterError("a k-point tuple needs k >= 2 points of S^2")
        if np.any(np.abs(np.linalg.norm(P, axis=1) - 1.0) > 1e-9):
            raise ParameterError("points must be unit vectors")
        nxt = np.roll(P, -1, axis=0)
        if np.any(np.linalg.norm(P - nxt, axis=1) < 1e-12):
            raise ParameterError("consecutive points must be distinct")
        k = len(P)
        if k >= 3 and k % 2 == 0 and np.allclose(P[::2], P[0]) and np.allclose(P[1::2], P[1]):
            raise ParameterError("alternating two-point tuples are excluded")
        object.__setattr__(self, "points", P)

    @property
    def k(self) -> int:
        return len(self.points)

    def distances(self):
        """Consecutive spherical distances d(v_i, v_{i+1}); one value when k = 2."""
        P = self.points
        if self.k == 2:
            return quat.geodesic_distance_s2(P[:1], P[1:])
        return quat.geodesic_distance_s2(P, np.roll(P, -1, axis=0))


def _skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass
class TangentTuple:
    """Tangent vectors dv_i at v_i; normal components are dropped on construction."""

    points: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        V = np.asarray(self.vectors, dtype=float)
        if P.shape != V.shape:
            raise ParameterError("points and vectors must have equal shapes")
        self.points = P
        self.vectors = V - np.sum(V * P, -1, keepdims=True) * P

    def rotation_component(self):
        """Least-squares omega with dv_i ~ omega x v_i."""
        A = np.concatenate([-_skew(v) for v in self.points])
        omega, *_ = np.linalg.lstsq(A, self.vectors.ravel(), rcond=None)
        return omega

    def canonical(self) -> "TangentTuple":
        """Representative modulo so3: the infinitesimal rotation part projected out."""
        omega = self.rotation_component()
        return TangentTuple(self.points, self.vectors - np.cross(omega, self.points))

    def distance_rates(self):
        """First-order change of the consecutive distances."""
        P, V = self.points, self.vectors
        idx = [(0, 1)] if len(P) == 2 else [(i, (i + 1) % len(P)) for i in range(len(P))]
        out = []
        for i, j in idx:
            d = np.arccos(np.clip(P[i] @ P[j], -1.0, 1.0))
            out.append(-(V[i] @ P[j] + P[i] @ V[j]) / np.sin(d))
        return np.array(out)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vectors))


@dataclass
class UnduloidClassification:
    params: NecksizeParams
    tuple: KPointTuple
    spreads: list
    patch: UnduloidPatch = field(repr=False)
    cousin: CousinPatch = field(repr=False)

    @property
    def distance(self) -> float:
        return float(self.tuple.distances()[0])

    @property
    def error(self) -> float:
        return abs(self.distance - self.params.n)


def t_bounds_for(params: NecksizeParams, t_range: float):
    half = 0.5 * t_range * profile_for(params.n).t_scale
    return (-half, half)


def classify_unduloid(params: NecksizeParams, grid=(400, 100), t_range: float = 3.0, rotation=None,
                      translation=None, t_bounds=None, spread_tol: float = SPREAD_TOL,
                      substeps: int = 1) -> UnduloidClassification:
    """(v1, v2): means of Pi_k over the two cousin boundary curves."""
    profile = profile_for(params.n)
    patch = immerse(profile, half=True, t_range=t_range, grid=grid, rotation=rotation,
                    translation=translation, t_bounds=t_bounds)
    cousin = integrate_cousin(patch, substeps=substeps)
    hopf = boundary_hopf(cousin)
    spreads = [s for _, s in hopf]
    if max(spreads) > spread_tol:
        raise NumericalFailure(f"boundary Hopf spread {max(spreads):.3e} exceeds {spread_tol:.1e}")
    return UnduloidClassification(params=params, tuple=KPointTuple(np.array([v for v, _ in hopf])),
                                  spreads=spreads, patch=patch, cousin=cousin)


# ---------------------------------------------------------------------------
# dPhi by finite differences along a family

FAMILIES = ("necksize", "translation", "rotation")


def _family_member(params, family, eps, axis, grid, t_bounds):
    if family == "necksize":
        return classify_unduloid(NecksizeParams(params.n + eps), grid=grid, t_bounds=t_bounds)
    if family == "translation":
        return classify_unduloid(params, grid=grid, t_bounds=t_bounds, translation=eps * np.asarray(axis))
    # e^{-eps u} M e^{eps u}
    return classify_unduloid(params, grid=grid, t_bounds=t_bounds,
                             rotation=quat.qexp(-eps * np.asarray(axis, dtype=float)))


def _align(target, moving):
    P, Q = target.points, moving.points
    if np.linalg.norm(np.cross(P[0], P[1])) < 1e-6:
        raise NumericalFailure("alignment is not unique for (nearly) antipodal points")
    rot, _ = Rotation.align_vectors(P, Q)
    return rot.apply(Q)


@dataclass
class DPhiResult:
    family: str
    h: float
    tangent: TangentTuple
    distance_rate: float
    distance_rate_direct: float


def dPhi_fd(params: NecksizeParams, h: float = 1e-4, family: str = "necksize", axis=(0.0, 0.0, 1.0),
            grid=(400, 100), t_range: float = 3.0) -> DPhiResult:
    """Central difference of the classifying tuple along a family, so3-aligned and canonicalized.

    All members are sampled on the same absolute t grid.  ``axis`` selects the
    translation direction or the rotation axis for the Euclidean families.
    """
    if family not in FAMILIES:
        raise ParameterError(f"unknown family {family!r}")
    if h <= 0:
        raise ParameterError("h must be positive")
    if family == "necksize" and not (0.0 < params.n - h and params.n + h < np.pi):
        raise ParameterError("n +- h must lie in (0, pi)")
    tb = t_bounds_for(params, t_range)
    base = classify_unduloid(params, grid=grid, t_bounds=tb)
    plus = _family_member(params, family, h, axis, grid, tb)
    minus = _family_member(params, family, -h, axis, grid, tb)
    vp = _align(base.tuple, plus.tuple)
    vm = _align(base.tuple, minus.tuple)
    tangent = TangentTuple(base.tuple.points, (vp - vm) / (2 * h)).canonical()
    direct = (plus.distance - minus.distance) / (2 * h)
    return DPhiResult(family=family, h=h, tangent=tangent,
                      distance_rate=float(tangent.distance_rates()[0]), distance_rate_direct=float(direct))


# ---------------------------------------------------------------------------
# dPhi from almost-odd cousin fields


def eta_cousin_field(params: NecksizeParams, cousin: CousinPatch, h: float = 1e-4) -> FieldOnPatch:
    """Cousin of the necksize change by differencing anchor-gauged cousin patches at n +- h."""
    if not (0.0 < params.n - h and params.n + h < np.pi):
        raise ParameterError("n +- h must lie in (0, pi)")
    patch = cousin.patch
    grid = patch.shape
    bounds = (patch.t[0], patch.t[-1])
    fts = []
    for n in (params.n + h, params.n - h):
        p = immerse(profile_for(n), half=True, grid=grid, t_bounds=bounds, rotation=patch.rotation,
                    translation=patch.translation)
        fts.append(integrate_cousin(p, scheme=cousin.scheme, substeps=cousin.substeps).ft)
    W = (fts[0] - fts[1]) / (2 * h)
    F = cousin.ft
    # drop the O(h^2) component normal to S^3
    W = W - np.sum(W * F, -1, keepdims=True) * F
    return FieldOnPatch(W, "cousin", "eta")


def dPhi_almost_odd(V, params: NecksizeParams, patch: UnduloidPatch, cousin: CousinPatch,
                    h: float = 1e-4) -> TangentTuple:
    """rho_{w_i} at v_i for the almost-odd cousin of an even field V.

    ``V`` is a translation or rotation KillingField, or the string "eta".
    """
    if isinstance(V, str):
        if V != "eta":
            raise ParameterError(f"unknown field {V!r}")
        W = eta_cousin_field(params, cousin, h)
    else:
        W = cousin_field(V, patch, cousin).integrated
    cls = classify_boundary(W, cousin)
    if any(v not in ("odd", "almost-odd") for v in cls.verdicts):
        raise ContractViolation(f"cousin field of {V} classified {cls.verdicts}, not almost odd")
    points = np.array([v for v, _ in boundary_hopf(cousin)])
    w = np.array(cls.vectors())
    # -rho_w(v) = 2 w x v
    return TangentTuple(points, 2.0 * np.cross(w, points))


# ---------------------------------------------------------------------------
# dA: end fits against the even asymptote basis

BASIS = ("eta", "tau_i", "tau_j", "rho_k")


@dataclass
class AsymptotePerturbation:
    end: str
    coeffs: dict
    residual: float
    window: tuple

    @property
    def necksize_change(self) -> float:
        return self.coeffs["eta"]

    @property
    def translation(self):
        return np.array([self.coeffs["tau_i"], self.coeffs["tau_j"], 0.0])

    @property
    def rotation(self) -> float:
        return self.coeffs["rho_k"]


def even_basis(params: NecksizeParams, patch: UnduloidPatch, h: float = 1e-4):
    """Vector fields eta, tau_i, tau_j, rho_k sampled on the patch."""
    eta = necksize_change_field(params, patch, h=h).values
    tau_i = np.broadcast_to(quat.I, patch.f.shape)
    tau_j = np.broadcast_to(quat.J, patch.f.shape)
    rho_k = KillingField("rotation", (0, 0, 1))(patch.f)
    return dict(zip(BASIS, (eta, tau_i, tau_j, rho_k)))


def dA_fit(V, params: NecksizeParams, patch: UnduloidPatch, window: float = 1.0, basis=None,
           use: str = "vector"):
    """Per-end least-squares coefficients of V against {eta, tau_i, tau_j, rho_k}.

    The fit window is the last ``window`` periods at each end.  ``use`` is
    "vector" (full fields) or "normal" (normal parts only).
    """
    T = patch.profile.t_scale
    extent = (patch.t[-1] - patch.t[0]) / T
    if extent < 2.0 - 1e-9:
        raise ParameterError(f"patch covers {extent:.2f} periods; the end fit needs at least 2")
    if use not in ("vector", "normal"):
        raise ParameterError("use must be 'vector' or 'normal'")
    basis = even_basis(params, patch) if basis is None else basis
    V = np.asarray(V, dtype=float)
    if use == "normal":
        proj = lambda X: np.sum(X * patch.nu, -1)[..., None]
    else:
        proj = lambda X: X
    ends = {"minus": patch.t <= patch.t[0] + window * T, "plus": patch.t >= patch.t[-1] - window * T}
    out = []
    for name, mask in ends.items():
        A = np.stack([proj(basis[b])[mask].ravel() for b in BASIS], axis=1)
        y = proj(V)[mask].ravel()
        G = A.T @ A
        cond = np.linalg.cond(G)
        if not np.isfinite(cond) or cond > GRAM_COND_MAX:
            raise NumericalFailure(f"end basis Gram matrix ill-conditioned (cond {cond:.2e})")
        coef = np.linalg.solve(G, A.T @ y)
        res = float(np.abs(A @ coef - y).max()) if y.size else 0.0
        tw = patch.t[mask]
        out.append(AsymptotePerturbation(end=name, coeffs=dict(zip(BASIS, map(float, coef))),
                                         residual=res, window=(float(tw[0]), float(tw[-1]))))
    return out


def family_variation(params: NecksizeParams, patch: UnduloidPatch, family: str, h: float = 1e-4,
                     axis=(0.0, 0.0, 1.0)):
    """d/d eps of the family's immersion at fixed (t, phi), by central differences."""
    t, phi = patch.t[:, None], patch.phi[None, :]
    if family == "necksize":
        return necksize_change_field(params, patch, h=h).values
    prof = patch.profile
    u = np.asarray(axis, dtype=float)
    if family == "translation":
        fp = revolution_frame(prof, t, phi, translation=h * u)[0]
        fm = revolution_frame(prof, t, phi, translation=-h * u)[0]
    elif family == "rotation":
        fp = revolution_frame(prof, t, phi, rotation=quat.qexp(-h * u))[0]
        fm = revolution_frame(prof, t, phi, rotation=quat.qexp(h * u))[0]
    else:
        raise ParameterError(f"unknown family {family!r}")
    return (fp - fm) / (2 * h)


def compare_dPhi_dA(params: NecksizeParams, family: str = "necksize", h: float = 1e-4,
                    axis=(0.0, 0.0, 1.0), grid=(400, 100), t_range: float = 3.0) -> dict:
    """Necksize-change rate from the end fit (eta coefficient) and from dPhi."""
    patch = immerse(profile_for(params.n), half=True, grid=grid, t_bounds=t_bounds_for(params, t_range))
    V = family_variation(params, patch, family, h=h, axis=axis)
    fits = dA_fit(V, params, patch)
    dphi = dPhi_fd(params, h=h, family=family, axis=axis, grid=grid, t_range=t_range)
    dA = [f.necksize_change for f in fits]
    return {
        "family": family,
        "n": params.n,
        "dA_eta": dA,
        "dA_residual": [f.residual for f in fits],
        "dPhi_rate": dphi.distance_rate,
        "dPhi_rate_direct": dphi.distance_rate_direct,
        "difference": float(max(abs(d - dphi.distance_rate) for d in dA)),
    }
