"""Delaunay unduloids: generating curves, conformal immersions, necksize variation.

The generating curve is integrated in arclength s with tangent angle psi,

    x' = cos psi,   r' = sin psi,   psi' = cos psi / r - 2,

which describes H = 1 surfaces of revolution about the i-axis with inward
normal.  The first integral r cos psi - r^2 = c equals a - a^2 for neck
radius a = n / 2 pi, so the bulge radius is b = 1 - a.  In the conformal
coordinate t (dt = ds / r) the same curve solves

    x' = r cos psi,   r' = r sin psi,   psi' = cos psi - 2 r,

and the immersion is (t, phi) -> x(t) i + r(t) e^{phi i} j.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import quat
from .errors import NumericalFailure, ParameterError
from .fd import diff

EVAL_RTOL = 1e-13
EVAL_ATOL = 1e-15


@dataclass(frozen=True)
class NecksizeParams:
    n: float

    def __post_init__(self):
        n = float(self.n)
        if not (0.0 < n <= np.pi) or not np.isfinite(n):
            raise ParameterError(f"necksize must lie in (0, pi]; got {self.n}")
        object.__setattr__(self, "n", n)

    @property
    def a(self) -> float:
        return self.n / (2 * np.pi)

    @property
    def b(self) -> float:
        return 1.0 - self.a

    @property
    def c(self) -> float:
        return self.a - self.a**2

    @property
    def is_cylinder(self) -> bool:
        return abs(self.n - np.pi) < 1e-14


def _arclength_rhs(s, y):
    x, r, psi, t = y
    return [np.cos(psi), np.sin(psi), np.cos(psi) / r - 2.0, 1.0 / r]


def _conformal_rhs(t, y):
    x, r, psi, s = y
    return [r * np.cos(psi), r * np.sin(psi), np.cos(psi) - 2.0 * r, r]


def _bulge_event(_, y):
    return y[2]


_bulge_event.terminal = True
_bulge_event.direction = -1


class _ConformalEvaluator:
    """Evaluates (x, r, psi, s) at arbitrary conformal t from one half period.

    Uses the evenness of the curve about the neck and its periodicity, so
    accuracy does not degrade along long ends.
    """

    def __init__(self, params: NecksizeParams, rtol=EVAL_RTOL, atol=EVAL_ATOL):
        self.params = params
        if params.is_cylinder:
            self.half_period = None
            return
        sol = solve_ivp(_conformal_rhs, (0.0, 100.0), [0.0, params.a, 0.0, 0.0],
                        method="DOP853", rtol=rtol, atol=atol, dense_output=True,
                        events=_bulge_event)
        if sol.status != 1:
            raise NumericalFailure("bulge event not found while integrating the profile")
        self.half_period = float(sol.t_events[0][0])
        yh = sol.y_events[0][0]
        self.x_period = 2.0 * yh[0]
        self.s_period = 2.0 * yh[3]
        self._sol = sol.sol

    @property
    def period(self):
        return None if self.half_period is None else 2.0 * self.half_period

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.half_period is None:
            return t / 2.0, np.full_like(t, 0.5), np.zeros_like(t), t / 2.0
        T = 2.0 * self.half_period
        k = np.round(t / T)
        tau = t - k * T
        sgn = np.where(tau < 0, -1.0, 1.0)
        at = np.clip(np.abs(tau), 0.0, self.half_period)
        y = self._sol(at.ravel()).reshape((4,) + at.shape)
        x = sgn * y[0] + k * self.x_period
        psi = sgn * y[2]
        s = sgn * y[3] + k * self.s_period
        return x, y[1], psi, s


@dataclass
class DelaunayProfile:
    """Sampled generating curve; ``t``/``period_t`` are filled by :func:`conformal_reparam`."""

    params: NecksizeParams
    s: np.ndarray
    x: np.ndarray
    r: np.ndarray
    psi: np.ndarray
    residual: np.ndarray
    period_s: Optional[float]
    tol: float
    t: Optional[np.ndarray] = None
    period_t: Optional[float] = None
    _sol_s: object = field(default=None, repr=False)
    _evaluator: object = field(default=None, repr=False)

    @property
    def c(self) -> float:
        return self.params.c

    @property
    def degenerate(self) -> bool:
        """Cylinder: no period, neck phase undefined, tau_i tangential."""
        return self.params.is_cylinder

    @property
    def t_scale(self) -> float:
        # the cylinder has no period; 2 pi is the limit of the conformal period as n -> pi
        return self.period_t if self.period_t is not None else 2 * np.pi

    def evaluate(self, t):
        """(x, r, psi, s) at conformal parameter values ``t`` (neck at t = 0)."""
        if self._evaluator is None:
            self._evaluator = _ConformalEvaluator(self.params)
        return self._evaluator(t)


@dataclass
class SphereProfile:
    """Unit sphere as an H = 1 surface of revolution (Mercator coordinates about i).

    Not a Delaunay surface; it is the testbed on which the cousin is the
    identity map up to gauge.
    """

    c: float = 0.0
    period_t: Optional[float] = None
    t_scale: float = 2.0
    degenerate: bool = False

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        gd = np.arctan(np.sinh(t))
        return np.tanh(t), 1.0 / np.cosh(t), -gd, gd


def solve_profile(params: NecksizeParams, tol: float = 1e-10, samples_per_period: int = 256,
                  periods: int = 1) -> DelaunayProfile:
    """Integrate the arclength system from the neck (r = a, psi = 0) over whole periods."""
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if samples_per_period < 4:
        raise ParameterError("samples_per_period must be at least 4")
    c = params.c
    rtol, atol = tol, tol * 1e-2
    y0 = [0.0, params.a, 0.0, 0.0]
    if params.is_cylinder:
        period_s = None
        s_end = np.pi * periods
    else:
        ev = solve_ivp(_arclength_rhs, (0.0, 100.0), y0, method="DOP853",
                       rtol=rtol, atol=atol, events=_bulge_event)
        if ev.status != 1:
            raise NumericalFailure("no bulge found along the arclength profile")
        period_s = 2.0 * float(ev.t_events[0][0])
        s_end = period_s * periods
    s = np.linspace(0.0, s_end, samples_per_period * periods + 1)
    sol = solve_ivp(_arclength_rhs, (0.0, s_end), y0, method="DOP853", t_eval=s,
                    rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise NumericalFailure(f"profile integration failed: {sol.message}")
    x, r, psi, _ = sol.y
    residual = r * np.cos(psi) - r**2 - c
    drift = float(np.max(np.abs(residual)))
    if drift > 10 * tol:
        raise NumericalFailure(f"conservation drift {drift:.3e} exceeds 10*tol")
    return DelaunayProfile(params=params, s=s, x=x, r=r, psi=psi, residual=residual,
                           period_s=period_s, tol=tol, _sol_s=sol.sol)


def conformal_reparam(profile: DelaunayProfile) -> DelaunayProfile:
    """Add the conformal coordinate t = int ds / r and the conformal period."""
    if profile.params.is_cylinder:
        t = 2.0 * profile.s
    else:
        sol_s = profile._sol_s
        q = solve_ivp(lambda s, y: [1.0 / sol_s(s)[1]], (profile.s[0], profile.s[-1]), [0.0],
                      method="DOP853", t_eval=profile.s, rtol=1e-12, atol=1e-14)
        t = q.y[0]
    ev = _ConformalEvaluator(profile.params)
    return replace(profile, t=t, period_t=ev.period, _evaluator=ev)


def profile_for(n: float, tol: float = 1e-10) -> DelaunayProfile:
    return conformal_reparam(solve_profile(NecksizeParams(n), tol=tol))


# ---------------------------------------------------------------------------
# immersions


def revolution_frame(profile, t, phi, rotation=None, translation=None):
    """Position, coordinate tangents and inward normal at (t, phi); broadcasts t against phi."""
    x, r, psi, _ = profile.evaluate(t)
    x, r, psi, phi = np.broadcast_arrays(x, r, psi, np.asarray(phi, dtype=float))
    cp, sp = np.cos(phi), np.sin(phi)
    cps, sps = np.cos(psi), np.sin(psi)
    f = np.stack([x, r * cp, r * sp], axis=-1)
    f_t = np.stack([r * cps, r * sps * cp, r * sps * sp], axis=-1)
    f_phi = np.stack([np.zeros_like(r), -r * sp, r * cp], axis=-1)
    nu = np.stack([sps, -cps * cp, -cps * sp], axis=-1)
    if rotation is not None:
        f, f_t, f_phi, nu = (quat.rotate(rotation, v) for v in (f, f_t, f_phi, nu))
    if translation is not None:
        f = f + np.asarray(translation, dtype=float)
    return f, f_t, f_phi, nu


@dataclass
class UnduloidPatch:
    """Conformal grid immersion of a surface of revolution, with frame data.

    ``J`` is the rotation with J d_t = d_phi (so u x Ju is the inward normal);
    ``rho`` is the conformal factor, |d_t f| = |d_phi f| = rho.
    """

    profile: object
    t: np.ndarray
    phi: np.ndarray
    half: bool
    f: np.ndarray
    f_t: np.ndarray
    f_phi: np.ndarray
    nu: np.ndarray
    rho: np.ndarray
    psi: np.ndarray
    A2: np.ndarray
    rotation: Optional[np.ndarray] = None
    translation: Optional[np.ndarray] = None

    @property
    def shape(self):
        return self.f.shape[:2]

    @property
    def h_t(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def h_phi(self) -> float:
        return float(self.phi[1] - self.phi[0])

    @property
    def anchor(self):
        """Neck node on the phi = 0 boundary curve."""
        return int(np.argmin(np.abs(self.t))), 0

    def frame(self, t, phi):
        return revolution_frame(self.profile, t, phi, self.rotation, self.translation)

    def J(self, v):
        return np.cross(self.nu, v)

    def boundary_rows(self):
        if not self.half:
            raise ParameterError("boundary curves exist only on the upper half patch")
        return [0, len(self.phi) - 1]


def immerse(profile, half: bool = False, t_range: float = 3.0, grid=(200, 100),
            rotation=None, translation=None, t_bounds=None) -> UnduloidPatch:
    """Sample the conformal immersion on a uniform (t, phi) grid.

    ``t_range`` is the total t-extent in conformal periods, centred on the
    neck; ``t_bounds`` overrides it with explicit limits.
    """
    n_t, n_phi = grid
    if n_t < 8 or n_phi < 4:
        raise ParameterError("grid too small")
    if t_bounds is None:
        if t_range <= 0:
            raise ParameterError("t_range must be positive")
        half_width = 0.5 * t_range * profile.t_scale
        t_bounds = (-half_width, half_width)
    t = np.linspace(t_bounds[0], t_bounds[1], n_t)
    if half:
        phi = np.linspace(0.0, np.pi, n_phi)
    else:
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
    f, f_t, f_phi, nu = revolution_frame(profile, t[:, None], phi[None, :], rotation, translation)
    _, r, psi, _ = profile.evaluate(t)
    k_par = np.cos(psi) / r
    A2 = (2.0 - k_par) ** 2 + k_par**2
    rot = None if rotation is None else quat.qnormalize(rotation)
    tr = None if translation is None else np.asarray(translation, dtype=float)
    return UnduloidPatch(profile=profile, t=t, phi=phi, half=half, f=f, f_t=f_t, f_phi=f_phi,
                         nu=nu, rho=r, psi=psi, A2=A2, rotation=rot, translation=tr)


def hemisphere_patch(grid=(200, 200), t_half: float = 3.0) -> UnduloidPatch:
    """Upper unit hemisphere (minus the poles +-i), Mercator coordinates about the i-axis."""
    return immerse(SphereProfile(), half=True, grid=grid, t_bounds=(-t_half, t_half))


# ---------------------------------------------------------------------------
# discrete checks


def conformality_defect(patch: UnduloidPatch, order: int = 6) -> float:
    """Relative defect of |f_t| = |f_phi| = rho, <f_t, f_phi> = 0 with f differentiated on the grid."""
    ft = diff(patch.f, patch.h_t, axis=0, order=order)
    fp = diff(patch.f, patch.h_phi, axis=1, order=order, periodic=not patch.half)
    r2 = patch.rho[:, None] ** 2
    e = np.abs(np.sum(ft * ft, -1) - r2) + np.abs(np.sum(fp * fp, -1) - r2) + np.abs(np.sum(ft * fp, -1))
    return float(np.max(e / r2))


def cotan_mean_curvature(patch: UnduloidPatch) -> np.ndarray:
    """Cotangent-formula mean curvature <Delta x, nu>/2 at interior vertices.

    Quads are split along the (i, j)-(i+1, j+1) diagonal; vertex areas are
    barycentric.  Returns an (n_t - 2, m) array (m = n_phi, or n_phi - 2 on
    the half patch).
    """
    P = patch.f
    n_t, n_phi = P.shape[:2]
    idx = np.arange(n_t * n_phi).reshape(n_t, n_phi)
    jn = n_phi if not patch.half else n_phi - 1
    i0 = idx[:-1, :jn]
    i1 = idx[1:, :jn]
    i2 = np.roll(idx, -1, axis=1)[1:, :jn]
    i3 = np.roll(idx, -1, axis=1)[:-1, :jn]
    tris = np.concatenate([np.stack([i0, i1, i2], -1).reshape(-1, 3),
                           np.stack([i0, i2, i3], -1).reshape(-1, 3)])
    X = P.reshape(-1, 3)
    lap = np.zeros_like(X)
    area = np.zeros(len(X))
    for k in range(3):
        a, b, c = tris[:, k], tris[:, (k + 1) % 3], tris[:, (k + 2) % 3]
        u = X[b] - X[a]
        v = X[c] - X[a]
        cr = np.cross(u, v)
        cot = np.sum(u * v, -1) / np.linalg.norm(cr, axis=-1)
        # angle at a is opposite the edge (b, c)
        w = 0.5 * cot[:, None] * (X[c] - X[b])
        np.add.at(lap, b, w)
        np.add.at(lap, c, -w)
        if k == 0:
            tri_area = 0.5 * np.linalg.norm(cr, axis=-1)
            for corner in range(3):
                np.add.at(area, tris[:, corner], tri_area / 3.0)
    lap = (lap / area[:, None]).reshape(n_t, n_phi, 3)
    H = 0.5 * np.sum(lap * patch.nu, -1)
    H = H[1:-1]
    return H[:, 1:-1] if patch.half else H


def jacobi_residual(u, patch: UnduloidPatch, order: int = 6) -> np.ndarray:
    """Conformal-form Jacobi residual u_tt + u_phiphi + rho^2 |A|^2 u on interior t-nodes."""
    w = (2 + order - 1) // 2
    u_tt = diff(u, patch.h_t, axis=0, deriv=2, order=order)
    if patch.half:
        u_pp = diff(u, patch.h_phi, axis=1, deriv=2, order=order)
    else:
        m = np.fft.fftfreq(u.shape[1], d=1.0 / u.shape[1])
        u_pp = np.real(np.fft.ifft(-(m**2) * np.fft.fft(u, axis=1), axis=1))
    res = u_tt + u_pp + (patch.rho**2 * patch.A2)[:, None] * u
    return res[w:-w]


# ---------------------------------------------------------------------------
# necksize change


@dataclass
class NecksizeChangeField:
    values: np.ndarray
    normal: np.ndarray
    h: float
    phase: float
    degenerate: bool
    jacobi_residual: float


def necksize_change_field(params: NecksizeParams, patch: UnduloidPatch, h: float = 1e-4,
                          phase: float = 0.0, max_residual: float = 1e-3) -> NecksizeChangeField:
    """d f / d n at fixed (t, phi), necks of the varied unduloids kept at t = phase.

    At n = pi only the one-sided difference from below exists; the result is
    flagged degenerate (on the cylinder the phase is a second free direction).
    """
    degenerate = params.is_cylinder
    if h <= 0:
        raise ParameterError("h must be positive")
    lo = params.n - h
    hi = params.n if degenerate else params.n + h
    if not (0.0 < lo and hi <= np.pi) or (not degenerate and hi >= np.pi):
        raise ParameterError("n +- h must lie in (0, pi)")
    t = patch.t[:, None] - phase
    f_hi = revolution_frame(profile_for(hi), t, patch.phi[None, :], patch.rotation)[0]
    f_lo = revolution_frame(profile_for(lo), t, patch.phi[None, :], patch.rotation)[0]
    eta = (f_hi - f_lo) / (hi - lo)
    normal = np.sum(eta * patch.nu, -1)
    res = jacobi_residual(normal, patch)
    rel = float(np.max(np.abs(res)) / max(1.0, np.max(np.abs(normal))))
    if rel > max_residual:
        raise NumericalFailure(f"necksize-change residual {rel:.3e}; step h={h} too large")
    return NecksizeChangeField(values=eta, normal=normal, h=h, phase=phase,
                               degenerate=degenerate, jacobi_residual=rel)
