import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from unduloid_lab import quat
from unduloid_lab.classify import (KPointTuple, TangentTuple, classify_unduloid, compare_dPhi_dA, dA_fit,
                                   dPhi_almost_odd, dPhi_fd, even_basis)
from unduloid_lab.delaunay import NecksizeParams, immerse, necksize_change_field, profile_for
from unduloid_lab.errors import NumericalFailure, ParameterError
from unduloid_lab.quat import I, J, K, KillingField


def test_half_pi():
    c = classify_unduloid(NecksizeParams(np.pi / 2))
    assert abs(c.distance - np.pi / 2) <= 1e-3


def test_cylinder_antipodal():
    c = classify_unduloid(NecksizeParams(np.pi))
    assert np.allclose(c.tuple.points[0], -c.tuple.points[1], atol=1e-8)


@pytest.mark.parametrize("n", [0.3, 0.9, 1.5, 2.1, 2.7])
def test_sweep(n):
    assert classify_unduloid(NecksizeParams(n)).error <= 5e-3


def test_gauge_invariance_of_distance(cousin15, rng):
    P0 = [v for v, _ in _hopf(cousin15)]
    for _ in range(5):
        q = quat.qnormalize(rng.normal(size=4))
        P = [v for v, _ in _hopf(cousin15.left_translate(q))]
        assert abs(np.arccos(P[0] @ P[1]) - np.arccos(P0[0] @ P0[1])) < 1e-10
        # a global rotation
        assert np.allclose(quat.rotate(q, P0[0]), P[0], atol=1e-12)


def _hopf(c):
    from unduloid_lab.cousin import boundary_hopf
    return boundary_hopf(c)


def test_spread_failure():
    with pytest.raises(NumericalFailure):
        classify_unduloid(NecksizeParams(1.5), grid=(40, 8), spread_tol=1e-12)


def test_kpoint_invariants():
    with pytest.raises(ParameterError):
        KPointTuple(np.array([I, I]))
    with pytest.raises(ParameterError):
        KPointTuple(np.array([I, J, I, J]))
    with pytest.raises(ParameterError):
        KPointTuple(np.array([I]))
    t = KPointTuple(np.array([I, J, K]))
    assert np.allclose(t.distances(), np.pi / 2)


unit = arrays(np.float64, 3, elements=st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 0.2)


@given(unit, unit, arrays(np.float64, (2, 3), elements=st.floats(-1, 1)))
def test_tangent_canonical_idempotent(a, b, V):
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    if np.linalg.norm(np.cross(a, b)) < 1e-2:
        return
    T = TangentTuple(np.array([a, b]), V)
    assert np.allclose(np.sum(T.vectors * T.points, -1), 0, atol=1e-12)
    c1 = T.canonical()
    c2 = c1.canonical()
    assert np.allclose(c1.vectors, c2.vectors, atol=1e-12)
    assert np.allclose(c1.distance_rates(), T.distance_rates(), atol=1e-9)


def test_pure_rotation_is_zero_in_quotient():
    P = np.array([I, quat.rotate(quat.qexp(0.4 * K), J)])
    w = np.array([0.3, -0.2, 0.5])
    assert TangentTuple(P, np.cross(w, P)).canonical().norm() < 1e-12


def test_dphi_necksize_rate():
    r = dPhi_fd(NecksizeParams(1.5))
    assert abs(r.distance_rate - 1) <= 1e-2 and abs(r.distance_rate_direct - 1) <= 1e-2


@pytest.mark.parametrize("h", [1e-5, 1e-4, 1e-3])
def test_dphi_h_plateau(h):
    assert abs(dPhi_fd(NecksizeParams(1.2), h=h, grid=(200, 50)).distance_rate - 1) <= 1e-2


@pytest.mark.parametrize("family,axis", [("translation", (1, 0, 0)), ("translation", (0, 1, 0)),
                                         ("rotation", (0, 0, 1))])
def test_dphi_killing_families_vanish(family, axis):
    r = dPhi_fd(NecksizeParams(1.5), family=family, axis=axis)
    assert r.tangent.norm() <= 1e-3 and abs(r.distance_rate) <= 1e-3


def test_dphi_preconditions():
    with pytest.raises(ParameterError):
        dPhi_fd(NecksizeParams(3.14159), h=1e-3)
    with pytest.raises(ParameterError):
        dPhi_fd(NecksizeParams(1.0), family="shear")


def test_dphi_almost_odd_killing_zero(half15, cousin15):
    P = NecksizeParams(1.5)
    for V in (KillingField("rotation", (0, 0, 1)), KillingField("translation", (1, 0, 0))):
        assert dPhi_almost_odd(V, P, half15, cousin15).norm() <= 1e-8


def test_dphi_almost_odd_eta_matches_fd(half15, cousin15):
    P = NecksizeParams(1.5)
    t = dPhi_almost_odd("eta", P, half15, cousin15)
    assert abs(t.distance_rates()[0] - dPhi_fd(P).distance_rate) <= 1e-2


def test_dA_basis_elements(half15):
    P = NecksizeParams(1.5)
    B = even_basis(P, half15)
    for k, lab in enumerate(("eta", "tau_i", "tau_j", "rho_k")):
        for fit in dA_fit(B[lab], P, half15, basis=B):
            want = np.eye(4)[k]
            got = np.array([fit.coeffs[b] for b in ("eta", "tau_i", "tau_j", "rho_k")])
            assert np.allclose(got, want, atol=1e-8), lab
            assert fit.residual <= 1e-8


def test_dA_needs_two_periods():
    p = immerse(profile_for(1.5), half=True, t_range=1.5, grid=(100, 20))
    with pytest.raises(ParameterError):
        dA_fit(np.zeros(p.f.shape), NecksizeParams(1.5), p)


def test_dA_ill_conditioned_cylinder_normal():
    p = immerse(profile_for(np.pi), half=True, t_range=3, grid=(100, 20))
    # tau_i is tangential on the cylinder
    with pytest.raises(NumericalFailure):
        dA_fit(np.zeros(p.f.shape), NecksizeParams(np.pi), p, use="normal")


@pytest.mark.parametrize("family,axis,want", [("necksize", (0, 0, 1), 1.0), ("rotation", (0, 0, 1), 0.0),
                                              ("translation", (0, 1, 0), 0.0)])
def test_compare_routes(family, axis, want):
    r = compare_dPhi_dA(NecksizeParams(1.5), family, axis=axis)
    assert r["difference"] <= 1e-2
    assert abs(r["dPhi_rate"] - want) <= 1e-3 and all(abs(x - want) <= 1e-3 for x in r["dA_eta"])
