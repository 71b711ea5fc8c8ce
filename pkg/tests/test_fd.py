import numpy as np
import pytest

from unduloid_lab.fd import diff, fd_weights


def test_weights_central():
    assert np.allclose(fd_weights((-1, 0, 1), 1), [-0.5, 0, 0.5])
    assert np.allclose(fd_weights((-1, 0, 1), 2), [1, -2, 1])


@pytest.mark.parametrize("order", [2, 4, 6])
@pytest.mark.parametrize("deriv", [1, 2])
def test_convergence_order(order, deriv):
    errs = []
    for n in (40, 80):
        x = np.linspace(0, 2, n)
        u = np.sin(3 * x)
        exact = 3 * np.cos(3 * x) if deriv == 1 else -9 * np.sin(3 * x)
        errs.append(np.abs(diff(u, x[1] - x[0], deriv=deriv, order=order) - exact).max())
    assert np.log2(errs[0] / errs[1]) > order - 0.7


def test_periodic_spectral_like():
    x = 2 * np.pi * np.arange(64) / 64
    d = diff(np.cos(2 * x), x[1], order=6, periodic=True)
    assert np.abs(d + 2 * np.sin(2 * x)).max() < 1e-6


def test_exact_on_polynomials_and_axis():
    x = np.linspace(-1, 1, 21)
    u = np.stack([x**3, x**2], axis=1)
    d = diff(u, x[1] - x[0], axis=0, order=4)
    assert np.allclose(d[:, 0], 3 * x**2, atol=1e-11)
    assert np.allclose(d[:, 1], 2 * x, atol=1e-11)


def test_too_few_nodes():
    with pytest.raises(ValueError):
        diff(np.zeros(4), 0.1, order=6)
