"""Fourier-mode analysis of the Jacobi operator on unduloids.

In conformal coordinates ds^2 = r^2 (dt^2 + dphi^2) the Laplacian is
r^-2 (d_tt + d_phiphi), so the Jacobi equation separates, for u = u_m(t) e^{i m phi},
into the Hill equation

    u_m'' = q_m u_m,     q_m = m^2 - r^2 |A|^2 = m^2 - 2 (r^2 + c^2 / r^2).

On the cylinder (r = 1/2, |A|^2 = 4) q_m = m^2 - 1 is constant.  Since
max r^2 |A|^2 = 2 (a^2 + b^2) < 2, q_m > 0 for |m| >= 2, which forces
exponential growth of every nonzero solution on at least one end.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .delaunay import NecksizeParams, UnduloidPatch, necksize_change_field, profile_for
from .errors import NumericalFailure, ParameterError
from .quat import I, J, K, KillingField

CLASSES = ("bounded-oscillatory", "linear (parabolic)", "exponential (hyperbolic)", "inconclusive")
OSC, PAR, HYP, INC = CLASSES
CYLINDER_T = 1.0


def r2A2(r, c):
    """r^2 |A|^2 from the first integral: 2 (r^2 + c^2 / r^2)."""
    return 2.0 * (r**2 + c**2 / r**2)


@dataclass
class ModeODE:
    m: int
    n: float
    period: float
    t: np.ndarray
    q: np.ndarray
    c: float
    cylinder: bool
    profile: object = field(repr=False, default=None)

    def potential(self, t):
        if self.cylinder:
            return np.full_like(np.asarray(t, dtype=float), self.m**2 - 1.0)
        r = self.profile.evaluate(t)[1]
        return self.m**2 - r2A2(r, self.c)


def mode_potential(profile, m: int, samples: int = 257) -> ModeODE:
    """q_m sampled over one conformal period centred on the neck."""
    if profile.period_t is None and not profile.degenerate:
        raise ParameterError("profile needs a conformal reparametrization")
    cyl = profile.degenerate
    T = CYLINDER_T if cyl else profile.period_t
    t = np.linspace(-T / 2, T / 2, samples)
    if cyl:
        q = np.full_like(t, m**2 - 1.0)
    else:
        r = profile.evaluate(t)[1]
        q = m**2 - r2A2(r, profile.c)
    return ModeODE(m=int(m), n=profile.params.n, period=T, t=t, q=q, c=profile.c, cylinder=cyl,
                   profile=profile)


@dataclass
class FloquetData:
    m: int
    monodromy: np.ndarray
    multipliers: tuple
    trace: float
    growth: str
    error: float
    band: float
    wronskian_defect: float
    period: float

    @property
    def abs_multipliers(self):
        return tuple(abs(x) for x in self.multipliers)

    @property
    def margin(self) -> float:
        """max |mu| - 1."""
        return max(self.abs_multipliers) - 1.0

    @property
    def decay_rate(self) -> float:
        """Exponential rate log|mu_max| / T (0 for non-hyperbolic modes)."""
        return float(np.log(max(self.abs_multipliers)) / self.period) if self.growth == HYP else 0.0


def _hill_rhs(m, c):
    def rhs(t, y):
        r, psi = y[0], y[1]
        q = m * m - r2A2(r, c)
        return [r * np.sin(psi), np.cos(psi) - 2 * r, y[3], q * y[2], y[5], q * y[4]]
    return rhs


def _transfer_product(ode: ModeODE, tol: float):
    """Period transfer matrix as a product of sub-interval transfers, plus prod det - 1."""
    T = ode.period
    qmax = float(np.max(np.abs(ode.q)))
    nsub = max(4, int(np.ceil(np.sqrt(qmax) * T / 2.0)))
    edges = np.linspace(-T / 2, T / 2, nsub + 1)
    _, r, psi, _ = ode.profile.evaluate(edges)
    rhs = _hill_rhs(ode.m, ode.c)
    M = np.eye(2)
    det = 1.0
    for k in range(nsub):
        y0 = [r[k], psi[k], 1.0, 0.0, 0.0, 1.0]
        sol = solve_ivp(rhs, (edges[k], edges[k + 1]), y0, method="DOP853", rtol=tol, atol=tol * 1e-3)
        if not sol.success:
            raise NumericalFailure(f"mode {ode.m} integration failed: {sol.message}")
        y = sol.y[:, -1]
        Mk = np.array([[y[2], y[4]], [y[3], y[5]]])
        det *= np.linalg.det(Mk)
        M = Mk @ M
    return M, abs(det - 1.0)


def _multipliers(tr: float):
    disc = tr * tr - 4.0
    if disc >= 0:
        big = 0.5 * (abs(tr) + np.sqrt(disc))
        big = np.copysign(big, tr)
        return (big, 1.0 / big)
    root = 0.5 * np.sqrt(-disc)
    return (complex(0.5 * tr, root), complex(0.5 * tr, -root))


def _cylinder_floquet(m: int) -> FloquetData:
    T = CYLINDER_T
    lam = m * m - 1.0
    if lam < 0:
        w = np.sqrt(-lam)
        M = np.array([[np.cos(w * T), np.sin(w * T) / w], [-w * np.sin(w * T), np.cos(w * T)]])
        mult = (complex(np.cos(w * T), np.sin(w * T)), complex(np.cos(w * T), -np.sin(w * T)))
        growth = OSC
    elif lam == 0:
        M = np.array([[1.0, T], [0.0, 1.0]])
        mult = (1.0, 1.0)
        growth = PAR
    else:
        s = np.sqrt(lam)
        M = np.array([[np.cosh(s * T), np.sinh(s * T) / s], [s * np.sinh(s * T), np.cosh(s * T)]])
        mult = (float(np.exp(s * T)), float(np.exp(-s * T)))
        growth = HYP
    return FloquetData(m=m, monodromy=M, multipliers=mult, trace=float(np.trace(M)), growth=growth,
                       error=0.0, band=0.0, wronskian_defect=abs(float(np.linalg.det(M)) - 1.0), period=T)


def monodromy(ode: ModeODE, tol: float = 1e-11) -> FloquetData:
    """Transfer of (u, u') over one period; growth class from the trace.

    The integration error is estimated by repeating at tol / 100.  With
    band = 10 * error: | |tr| - 2 | <= band is parabolic, beyond 10 * band it is
    oscillatory or hyperbolic, and in between the mode is inconclusive.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if ode.cylinder:
        return _cylinder_floquet(ode.m)
    M, wdef = _transfer_product(ode, tol)
    M_ref, _ = _transfer_product(ode, tol / 100.0)
    tr = float(np.trace(M))
    err = float(abs(tr - np.trace(M_ref))) + 4 * np.finfo(float).eps * max(1.0, abs(tr))
    band = 10.0 * err
    gap = abs(abs(tr) - 2.0)
    if gap <= band:
        growth = PAR
    elif gap <= 10.0 * band:
        growth = INC
    elif abs(tr) < 2.0:
        growth = OSC
    else:
        growth = HYP
    mult = (1.0, 1.0) if growth == PAR else _multipliers(tr)
    return FloquetData(m=ode.m, monodromy=M, multipliers=mult, trace=tr, growth=growth, error=err,
                       band=band, wronskian_defect=float(wdef), period=ode.period)


def classify_mode(data: FloquetData):
    """(growth class, number of sub-exponential solutions or None if inconclusive)."""
    if data.growth == INC:
        return data.growth, None
    return data.growth, 0 if data.growth == HYP else 2


def mode_sweep(params: NecksizeParams, m_max: int = 8, tol: float = 1e-11):
    profile = profile_for(params.n)
    return [monodromy(mode_potential(profile, m), tol) for m in range(m_max + 1)]


@dataclass
class TemperedCount:
    total: Optional[int]
    even: Optional[int]
    per_mode: list
    tail_ok: bool
    inconclusive: bool
    floquet: list = field(repr=False, default_factory=list)

    def as_tuple(self):
        return (self.total, self.even)


def tempered_dimension(params: NecksizeParams, m_max: int = 8, tol: float = 1e-11) -> TemperedCount:
    """Tempered Jacobi fields: c_0 + 2 sum c_m in total, c_0 + sum c_m mirror-even.

    Modes m >= 1 come in cos/sin pairs; the cos member is the even one.  Modes
    beyond m_max are covered by q_m > 0 pointwise once m^2 > max r^2 |A|^2.
    """
    if m_max < 2:
        raise ParameterError("m_max must be at least 2")
    data = mode_sweep(params, m_max, tol)
    counts = [classify_mode(d)[1] for d in data]
    profile = profile_for(params.n)
    peak = 1.0 if params.is_cylinder else 2.0 * (params.a**2 + params.b**2)
    tail_ok = (m_max + 1) ** 2 > peak
    inconclusive = any(c is None for c in counts) or not tail_ok
    if inconclusive:
        total = even = None
    else:
        total = counts[0] + 2 * sum(counts[1:])
        even = counts[0] + sum(counts[1:])
    return TemperedCount(total=total, even=even, per_mode=counts, tail_ok=tail_ok,
                         inconclusive=inconclusive, floquet=data)


@dataclass
class NondegeneracyVerdict:
    verdict: str
    evidence: list
    tempered: TemperedCount


def nondegeneracy_check(params: NecksizeParams, m_max: int = 8, tol: float = 1e-11) -> NondegeneracyVerdict:
    """No mode carries an L^2 solution.

    A hyperbolic mode's decaying Floquet solution grows on the other end;
    parabolic and oscillatory modes have no decaying solutions at all.
    """
    tc = tempered_dimension(params, m_max, tol)
    evidence = []
    for d in tc.floquet:
        reason = {
            HYP: "decays on one end only (grows like |mu_max|^(t/T) on the other)",
            PAR: "solutions periodic or linear: no decay",
            OSC: "solutions bounded quasi-periodic: no decay",
            INC: "multiplier within the uncertainty band",
        }[d.growth]
        evidence.append({"m": d.m, "class": d.growth, "trace": d.trace, "margin": d.margin,
                         "decay_rate": d.decay_rate, "reason": reason})
    if not tc.tail_ok:
        evidence.append({"m": f">{m_max}", "class": INC, "reason": "tail bound q_m > 0 not established"})
    verdict = "inconclusive" if tc.inconclusive else "nondegenerate"
    return NondegeneracyVerdict(verdict=verdict, evidence=evidence, tempered=tc)


# ---------------------------------------------------------------------------
# geometric Jacobi fields


@dataclass
class GeometricField:
    label: str
    normal: np.ndarray
    parity: str
    modes: dict
    residual: float


def _parity(u, tol=1e-8):
    n_phi = u.shape[1]
    refl = u[:, (-np.arange(n_phi)) % n_phi]
    scale = max(float(np.abs(u).max()), 1e-300)
    if np.abs(u - refl).max() <= tol * scale:
        return "even"
    if np.abs(u + refl).max() <= tol * scale:
        return "odd"
    return "mixed"


def mode_content(u, tol=1e-8):
    """Fraction of the phi-Fourier energy in each |m| (entries above tol)."""
    F = np.fft.rfft(u, axis=1)
    e = np.sum(np.abs(F) ** 2, axis=0)
    tot = e.sum()
    if tot == 0:
        return {}
    frac = e / tot
    return {int(m): float(f) for m, f in enumerate(frac) if f > tol}


def geometric_jacobi_fields(patch: UnduloidPatch, params: NecksizeParams, h: float = 1e-4):
    """Normal parts of tau_i, tau_j, tau_k, rho_j, rho_k and eta on the full patch."""
    if patch.half:
        raise ParameterError("geometric fields are sampled on the full unduloid")
    from .delaunay import jacobi_residual

    fields = {
        "tau_i": np.broadcast_to(I, patch.f.shape),
        "tau_j": np.broadcast_to(J, patch.f.shape),
        "tau_k": np.broadcast_to(K, patch.f.shape),
        "rho_j": KillingField("rotation", (0, 1, 0))(patch.f),
        "rho_k": KillingField("rotation", (0, 0, 1))(patch.f),
    }
    normals = {k: np.sum(v * patch.nu, -1) for k, v in fields.items()}
    if params.is_cylinder:
        normals["eta"] = necksize_change_field(params, patch, h=h).normal
    else:
        normals["eta"] = necksize_change_field(params, patch, h=h).normal
    out = []
    for label, u in normals.items():
        res = jacobi_residual(u, patch)
        rel = float(np.abs(res).max() / max(1.0, np.abs(u).max()))
        out.append(GeometricField(label=label, normal=u, parity=_parity(u), modes=mode_content(u),
                                  residual=rel))
    return out


def field_rank(fields, rel_tol: float = 1e-8):
    """Numerical rank and condition number of the sampled normal parts."""
    A = np.stack([f.normal.ravel() for f in fields], axis=1)
    s = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(s > rel_tol * s[0]))
    return rank, float(s[0] / s[-1]) if s[-1] > 0 else np.inf
