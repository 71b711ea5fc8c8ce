import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from unduloid_lab.errors import ParameterError
from unduloid_lab.quat import (I, J, K, ONE, KillingField, Quaternion, as_quat, d_hopf, geodesic_distance_s2,
                               hopf_project, killing_eval, qconj, qexp, qinv, qlog, qmul, qnorm, qnormalize,
                               rotate)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=finite)
quat4 = arrays(np.float64, 4, elements=finite).filter(lambda q: np.linalg.norm(q) > 1e-3)


def test_basis_products():
    i, j, k = as_quat(I), as_quat(J), as_quat(K)
    assert np.allclose(qmul(i, j), k)
    assert np.allclose(qmul(j, k), i)
    assert np.allclose(qmul(k, i), j)
    assert np.allclose(qmul(i, i), -ONE)
    assert np.allclose(qmul(qmul(i, j), k), -ONE)


@given(quat4, quat4, quat4)
def test_associative_and_norm_multiplicative(p, q, r):
    assert np.allclose(qmul(qmul(p, q), r), qmul(p, qmul(q, r)), atol=1e-10)
    assert np.isclose(qnorm(qmul(p, q)), qnorm(p) * qnorm(q), rtol=1e-12)
    assert np.allclose(qmul(p, qinv(p)), ONE, atol=1e-12)


@given(vec3)
def test_exp_log_roundtrip(v):
    th = np.linalg.norm(v)
    if th >= np.pi - 1e-6:
        return
    assert np.isclose(qnorm(qexp(v)), 1.0)
    assert np.allclose(qlog(qexp(v)), v, atol=1e-10)


def test_exp_closed_form():
    assert np.allclose(qexp(np.pi / 2 * K), as_quat(K), atol=1e-15)
    assert np.allclose(qexp(np.zeros(3)), ONE)


@given(quat4, vec3)
def test_rotation_is_isometry(q, v):
    w = rotate(qnormalize(q), v)
    assert np.isclose(np.linalg.norm(w), np.linalg.norm(v), atol=1e-12)


@given(quat4)
def test_hopf_lands_on_sphere_and_is_fiberwise_constant(q):
    p = qnormalize(q)
    v = hopf_project(p)
    assert np.isclose(np.linalg.norm(v), 1.0)
    # right multiplication by e^{theta k} stays in the fiber
    assert np.allclose(hopf_project(qmul(p, qexp(0.7 * K))), v, atol=1e-12)


def test_hopf_rejects_non_unit_axis():
    with pytest.raises(ParameterError):
        hopf_project(ONE, np.array([1.0, 1.0, 0.0]))


def test_geodesic_distance():
    assert np.isclose(geodesic_distance_s2(I, J), np.pi / 2)
    assert np.isclose(geodesic_distance_s2(K, -K), np.pi)
    with pytest.raises(ParameterError):
        geodesic_distance_s2(2 * I, J)


@given(vec3, vec3)
def test_rotation_field_convention(u, p):
    # rho_u(p) = p u - u p = -2 u x p
    got = killing_eval(KillingField("rotation", tuple(u)), p)
    assert np.allclose(got, -2 * np.cross(u, p), atol=1e-12)


def test_killing_domains():
    with pytest.raises(ParameterError):
        killing_eval(KillingField("left", (1, 0, 0)), np.zeros(3))
    with pytest.raises(ParameterError):
        killing_eval(KillingField("translation", (1, 0, 0)), ONE)
    with pytest.raises(ParameterError):
        KillingField("screw", (1, 0, 0))


@given(quat4, vec3)
@settings(max_examples=50)
def test_d_hopf_matches_finite_difference(q, u):
    p = qnormalize(q)
    h = 1e-6
    num = (hopf_project(qnormalize(qmul(qexp(h * u), p))) - hopf_project(qnormalize(qmul(qexp(-h * u), p)))) / (2 * h)
    assert np.allclose(d_hopf(p, KillingField("left", tuple(u))), num, atol=1e-6)


def test_left_right_fields_tangent_to_sphere():
    p = qnormalize(np.array([0.3, -0.2, 0.9, 0.1]))
    for kind in ("left", "right"):
        W = killing_eval(KillingField(kind, (0.2, 0.5, -1.0)), p)
        assert abs(np.dot(W, p)) < 1e-15


def test_quaternion_value_type():
    a = Quaternion.exp([0, 0, np.pi / 4])
    b = a * a
    assert np.allclose(b.array(), as_quat(K), atol=1e-15)
    assert np.isclose((a * a.inverse()).w, 1.0)
    assert np.isclose(Quaternion(3, 4, 0, 0).norm(), 5.0)
    assert np.allclose((a - a).array(), 0)
    assert np.allclose(a.conj().array(), qconj(a.array()))
