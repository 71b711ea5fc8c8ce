"""Quaternion algebra on S^3, Hopf projection and Killing fields.

Quaternions are numpy arrays with last axis ``(w, x, y, z)``; imaginary
vectors (points of R^3 = Im H, and of S^2 when unit) have last axis
``(x, y, z)``.  All functions broadcast over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

UNIT_TOL = 1e-12

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([1.0, 0.0, 0.0])
J = np.array([0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 1.0])


def as_quat(v):
    """Embed imaginary vectors (..., 3) as quaternions (..., 4)."""
    v = np.asarray(v, dtype=float)
    return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)


def im(q):
    return np.asarray(q)[..., 1:]


def qmul(p, q):
    """Hamilton product."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ], axis=-1)


def qconj(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def qnorm(q):
    return np.linalg.norm(q, axis=-1)


def qinv(q):
    q = np.asarray(q, dtype=float)
    return qconj(q) / np.sum(q * q, axis=-1, keepdims=True)


def qnormalize(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def qexp(v):
    """exp of an imaginary quaternion given as a 3-vector: cos|v| + sin|v| v/|v|."""
    v = np.asarray(v, dtype=float)
    th = np.linalg.norm(v, axis=-1, keepdims=True)
    # sin(th)/th with a series near 0
    small = th < 1e-8
    sinc = np.where(small, 1.0 - th**2 / 6.0, np.sin(th) / np.where(small, 1.0, th))
    return np.concatenate([np.cos(th), sinc * v], axis=-1)


def qlog(q):
    """Inverse of :func:`qexp` on unit quaternions (principal branch), as a 3-vector."""
    q = qnormalize(q)
    w = np.clip(q[..., :1], -1.0, 1.0)
    v = q[..., 1:]
    s = np.linalg.norm(v, axis=-1, keepdims=True)
    th = np.arctan2(s, w)
    small = s < 1e-12
    return np.where(small, v, v * th / np.where(small, 1.0, s))


def rotate(q, v):
    """Adjoint action q v q^{-1} of a unit quaternion on 3-vectors."""
    return im(qmul(qmul(q, as_quat(v)), qconj(q)))


def _check_unit(u, what="u"):
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(np.linalg.norm(u, axis=-1) - 1.0) > 1e-9):
        raise ParameterError(f"{what} must be a unit vector")
    return u


def hopf_project(p, u=K):
    """u-Hopf projection p u p^{-1}; p is renormalized first."""
    u = _check_unit(u)
    return rotate(qnormalize(p), u)


def geodesic_distance_s2(v, w):
    v = _check_unit(v, "v")
    w = _check_unit(w, "w")
    return np.arccos(np.clip(np.sum(v * w, axis=-1), -1.0, 1.0))


KINDS = ("translation", "rotation", "left", "right")


@dataclass(frozen=True)
class KillingField:
    """Killing field on R^3 (translation, rotation) or on S^3 (left, right).

    ``rotation`` carries the factor 2 of the quaternionic convention:
    rho_u(p) = p u - u p = -2 u x p, the velocity of p -> e^{-tu} p e^{tu}.
    """

    kind: str
    axis: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown Killing field kind {self.kind!r}")
        object.__setattr__(self, "axis", tuple(float(c) for c in self.axis))

    @property
    def u(self):
        return np.array(self.axis)

    def __call__(self, p):
        return killing_eval(self, p)


def killing_eval(field: KillingField, p):
    """Evaluate a Killing field.  R^3 fields return 3-vectors, S^3 fields quaternions."""
    p = np.asarray(p, dtype=float)
    u = field.u
    if field.kind in ("translation", "rotation"):
        if p.shape[-1] != 3:
            raise ParameterError(f"{field.kind} field lives on R^3; got shape {p.shape}")
        if field.kind == "translation":
            return np.broadcast_to(u, p.shape).copy()
        return im(qmul(as_quat(p), as_quat(u)) - qmul(as_quat(u), as_quat(p)))
    if p.shape[-1] != 4:
        raise ParameterError(f"{field.kind} field lives on S^3; got shape {p.shape}")
    if field.kind == "left":
        return qmul(as_quat(u), p)
    return qmul(p, as_quat(u))


def d_hopf(p, field: KillingField):
    """Push-forward of a left-translation field under Pi_k: 2 u x Pi_k(p)."""
    if field.kind != "left":
        raise ParameterError("d_hopf is defined for left-translation fields only")
    return 2.0 * np.cross(field.u, hopf_project(p))


@dataclass(frozen=True)
class Quaternion:
    """Scalar quaternion value; thin wrapper over the array functions."""

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, a):
        return cls(*map(float, a))

    @classmethod
    def exp(cls, v):
        return cls.from_array(qexp(v))

    def array(self):
        return np.array([self.w, self.x, self.y, self.z])

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(qmul(self.array(), other.array()))
        return Quaternion.from_array(self.array() * other)

    __rmul__ = __mul__

    def __add__(self, other):
        return Quaternion.from_array(self.array() + other.array())

    def __sub__(self, other):
        return Quaternion.from_array(self.array() - other.array())

    def conj(self):
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def inverse(self):
        return Quaternion.from_array(qinv(self.array()))

    def norm(self):
        return float(qnorm(self.array()))

    def unit(self):
        return Quaternion.from_array(qnormalize(self.array()))
