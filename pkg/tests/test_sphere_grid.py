import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import sph_harm_y

from starflow.sphere_grid import (
    GridError,
    band_limit,
    build_grid,
    integrate_sigma,
    resample,
    sigma_gradient,
    sigma_hessian,
    sigma_laplacian,
)


@pytest.fixture(scope="module")
def g2():
    return build_grid(2, (32, 64))


def test_circle_nodes_and_weights():
    g = build_grid(1, 8)
    assert np.allclose(g.theta, 2 * np.pi * np.arange(8) / 8)
    assert np.allclose(g.weights, 2 * np.pi / 8)


def test_sphere_total_measure(g2):
    assert np.all(g2.weights > 0)
    assert abs(g2.weights.sum() - 4 * np.pi) <= 1e-6
    assert g2.theta.min() > 0 and g2.theta.max() < np.pi


@pytest.mark.parametrize(
    "n,res",
    [(3, 16), (0, 16), (1, 4), (2, (4, 16)), (2, (16, 8)), (2, (16, 33))],
)
def test_build_grid_rejects(n, res):
    with pytest.raises(GridError):
        build_grid(n, res)


def test_unsupported_dimension_message():
    with pytest.raises(GridError, match="unsupported dimension"):
        build_grid(3, 16)


def test_shape_mismatch(g2):
    with pytest.raises(GridError):
        sigma_gradient(np.ones((10, 10)), g2)


def test_constant_derivatives_vanish(g2):
    f = np.full(g2.shape, 2.5)
    assert np.abs(sigma_gradient(f, g2)).max() < 1e-10
    assert np.abs(sigma_hessian(f, g2)).max() < 1e-10


def test_circle_derivatives():
    g = build_grid(1, 64)
    t = g.theta
    assert np.abs(sigma_gradient(np.sin(t), g)[..., 0] - np.cos(t)).max() <= 1e-8
    assert np.abs(sigma_hessian(np.cos(2 * t), g)[..., 0, 0] + 4 * np.cos(2 * t)).max() <= 1e-8


def test_gradient_cos_theta(g2):
    th, _ = g2.mesh()
    d = sigma_gradient(np.cos(th), g2)
    assert np.abs(d[..., 0] + np.sin(th)).max() <= 1e-6
    assert np.abs(d[..., 1]).max() <= 1e-6


def test_hessian_cos_theta(g2):
    th, _ = g2.mesh()
    H = sigma_hessian(np.cos(th), g2)
    assert np.abs(H[..., 0, 0] + np.cos(th)).max() <= 1e-5
    assert np.abs(H[..., 0, 1]).max() <= 1e-5
    assert np.abs(H[..., 1, 1] + np.cos(th) * np.sin(th) ** 2).max() <= 1e-5
    assert np.abs(sigma_laplacian(np.cos(th), g2) + 2 * np.cos(th)).max() <= 1e-5


def test_hessian_convergence_order():
    errs = []
    for nt in (16, 32):
        g = build_grid(2, (nt, 2 * nt))
        th, _ = g.mesh()
        H = sigma_hessian(np.cos(th) ** 3, g)
        # Hessian of cos^3: d2/dth2 and the Christoffel term on the phi-phi entry
        exact_tt = 6 * np.cos(th) * np.sin(th) ** 2 - 3 * np.cos(th) ** 3
        errs.append(np.abs(H[..., 0, 0] - exact_tt).max())
    assert errs[0] / errs[1] >= 8


def _real_ylm(l, m, th, ph):
    y = sph_harm_y(l, abs(m), th, ph)
    if m == 0:
        return y.real
    return np.sqrt(2) * (-1) ** m * (y.real if m > 0 else y.imag)


@pytest.mark.parametrize("l", range(5))
def test_laplacian_of_harmonics(g2, l):
    th, ph = g2.mesh()
    for m in range(-l, l + 1):
        Y = _real_ylm(l, m, th, ph)
        assert np.abs(sigma_laplacian(Y, g2) + l * (l + 1) * Y).max() <= 1e-4


def test_integrals(g2):
    th, _ = g2.mesh()
    assert abs(integrate_sigma(np.ones(g2.shape), g2) - 4 * np.pi) <= 1e-6
    assert abs(integrate_sigma(np.cos(th), g2)) <= 1e-8
    assert abs(integrate_sigma(np.cos(th) ** 2, g2) - 4 * np.pi / 3) <= 1e-6


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=15))
@settings(max_examples=30, deadline=None)
def test_circle_quadrature_exact_for_trig_polynomials(coefs):
    g = build_grid(1, 32)
    t = g.theta
    f = sum(c * np.cos(m * t) for m, c in enumerate(coefs))
    assert abs(integrate_sigma(f, g) - 2 * np.pi * coefs[0]) <= 1e-12


def test_band_limit_keeps_low_degrees_and_removes_high(g2):
    th, ph = g2.mesh()
    low = _real_ylm(6, 2, th, ph) + 0.3 * _real_ylm(1, -1, th, ph)
    assert np.abs(band_limit(low, g2) - low).max() < 1e-10
    # cos(30 phi) without the sin^30 theta envelope needs degrees far above the band
    rough = np.cos(30 * ph)
    once = band_limit(rough, g2)
    assert integrate_sigma(once**2, g2) < 0.5 * integrate_sigma(rough**2, g2)
    assert np.abs(band_limit(once, g2) - once).max() < 1e-10


def test_resample_is_exact_for_band_limited_fields():
    a, b = build_grid(2, (16, 32)), build_grid(2, (24, 48))
    f = lambda g: 1 + 0.2 * _real_ylm(3, 2, *g.mesh()) - 0.1 * _real_ylm(2, 0, *g.mesh())  # noqa: E731
    assert np.abs(resample(f(a), a, b) - f(b)).max() < 1e-12
    c, d = build_grid(1, 16), build_grid(1, 40)
    assert np.abs(resample(np.sin(3 * c.theta), c, d) - np.sin(3 * d.theta)).max() < 1e-12
