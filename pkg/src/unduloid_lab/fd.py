"""Uniform-grid finite differences of selectable order."""
from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np


@lru_cache(maxsize=None)
def fd_weights(offsets: tuple, deriv: int) -> np.ndarray:
    """Weights w with sum_k w_k u(x + o_k h) ~ h^deriv u^(deriv)(x)."""
    o = np.asarray(offsets, dtype=float)
    m = len(o)
    V = np.vander(o, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[deriv] = factorial(deriv)
    return np.linalg.solve(V, rhs)


def diff(u, h: float, axis: int = 0, deriv: int = 1, order: int = 4, periodic: bool = False):
    """Derivative of ``u`` along ``axis``; one-sided stencils of the same order at the ends."""
    u = np.moveaxis(np.asarray(u, dtype=float), axis, 0)
    n = u.shape[0]
    w = (deriv + order - 1) // 2
    central = fd_weights(tuple(range(-w, w + 1)), deriv)
    out = np.zeros_like(u)
    if periodic:
        for k, c in zip(range(-w, w + 1), central):
            out += c * np.roll(u, -k, axis=0)
        return np.moveaxis(out / h**deriv, 0, axis)
    m = deriv + order
    if n < m + 1:
        raise ValueError(f"need at least {m + 1} nodes for order-{order} differences")
    for k, c in zip(range(-w, w + 1), central):
        out[w:n - w] += c * u[w + k:n - w + k]
    for i in range(w):
        left = fd_weights(tuple(range(-i, m - i)), deriv)
        out[i] = np.tensordot(left, u[:m], axes=(0, 0))
        right = fd_weights(tuple(range(-(m - 1 - i), i + 1)), deriv)
        out[n - 1 - i] = np.tensordot(right, u[n - m:], axes=(0, 0))
    return np.moveaxis(out / h**deriv, 0, axis)
