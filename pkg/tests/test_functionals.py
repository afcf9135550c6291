from types import SimpleNamespace

import numpy as np
import pytest
from scipy.special import ellipe

from conftest import ellipse_rho, ellipsoid_rho
from starflow.curvfun import CurvatureFunctionSpec
from starflow.flow import FlowConfig, run
from starflow.functionals import (
    NotKConvex,
    af_ratio,
    minkowski_residual,
    parallel_volume_oracle,
    quermassintegrals,
    steiner_polynomial,
    unit_ball_volume,
    variational_check,
)
from starflow.geometry import shape_from_radial
from starflow.sphere_grid import build_grid


def test_unit_ball_volume():
    assert unit_ball_volume(1) == pytest.approx(np.pi)
    assert unit_ball_volume(2) == pytest.approx(4 * np.pi / 3)


def test_ball_and_disc():
    g = build_grid(2, (48, 96))
    W = quermassintegrals(shape_from_radial(np.ones(g.shape), g))
    assert np.abs(W - 4 * np.pi / 3).max() <= 1e-6
    g1 = build_grid(1, 128)
    W = quermassintegrals(shape_from_radial(np.ones(128), g1))
    assert np.abs(W - np.pi).max() <= 1e-10


def test_ellipse_area_and_perimeter():
    a, b = 1.5, 1.0
    g = build_grid(1, 256)
    W = quermassintegrals(shape_from_radial(ellipse_rho(g.theta, a, b), g))
    perimeter = 4 * a * ellipe(1 - (b / a) ** 2)
    assert W[0] == pytest.approx(np.pi * a * b, rel=1e-12)
    assert W[1] == pytest.approx(perimeter / 2, rel=1e-12)
    assert W[2] == pytest.approx(np.pi, rel=1e-12)


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.7])
def test_scaling(lam):
    g = build_grid(2, (24, 48))
    rho = ellipsoid_rho(g)
    W1 = quermassintegrals(shape_from_radial(rho, g))
    W2 = quermassintegrals(shape_from_radial(lam * rho, g))
    expo = 3 - np.arange(4)
    assert np.allclose(W2, W1 * lam**expo, rtol=1e-10, atol=0)


def test_gauss_bonnet_term():
    g = build_grid(2, (48, 96))
    th, ph = g.mesh()
    shapes = [ellipsoid_rho(g), np.ones(g.shape), 1 + 0.1 * np.cos(th) ** 2 + 0.05 * np.sin(th) * np.sin(ph)]
    vals = [quermassintegrals(shape_from_radial(r, g))[3] for r in shapes]
    assert np.ptp(vals) / (4 * np.pi / 3) <= 1e-4


def test_steiner_examples():
    assert steiner_polynomial([np.pi] * 3, 0.1) == pytest.approx(1.21 * np.pi, abs=1e-12)
    assert steiner_polynomial([4 * np.pi / 3] * 4, 0.5) == pytest.approx(4 * np.pi / 3 * 3.375)
    assert steiner_polynomial([2.0, 5.0, 7.0], 0.0) == 2.0
    with pytest.raises(ValueError):
        steiner_polynomial([1, 1, 1], -0.1)


def test_oracle_reproducible_and_validated():
    g = build_grid(1, 64)
    geo = shape_from_radial(np.ones(64), g)
    a = parallel_volume_oracle(geo, 0.2, samples=100_000, seed=7)
    b = parallel_volume_oracle(geo, 0.2, samples=100_000, seed=7)
    assert a == b
    with pytest.raises(ValueError):
        parallel_volume_oracle(geo, 0.2, samples=1000)
    with pytest.raises(ValueError):
        parallel_volume_oracle(geo, -0.1, samples=100_000)


def test_oracle_zero_offset_matches_volume():
    g = build_grid(1, 256)
    geo = shape_from_radial(ellipse_rho(g.theta, 1.5, 1.0), g)
    v, se = parallel_volume_oracle(geo, 0.0, samples=200_000, seed=1)
    assert abs(v - quermassintegrals(geo)[0]) <= 3 * se


def test_oracle_ball():
    g = build_grid(2, (24, 48))
    geo = shape_from_radial(np.ones(g.shape), g)
    v, se = parallel_volume_oracle(geo, 0.5, samples=1_000_000, seed=0)
    assert abs(v - 4 * np.pi / 3 * 3.375) <= 3 * se


def test_af_ratio():
    g = build_grid(2, (48, 96))
    for r in (0.5, 1.0, 2.0):
        geo = shape_from_radial(np.full(g.shape, r), g)
        for k in (0, 1, 2):
            assert af_ratio(geo, k) == pytest.approx(1.0, abs=1e-8)
    assert af_ratio(shape_from_radial(ellipsoid_rho(g), g), 1) >= 1 + 1e-3
    g1 = build_grid(1, 128)
    with pytest.raises(NotKConvex) as exc:
        af_ratio(shape_from_radial(1 + 0.45 * np.cos(2 * g1.theta), g1), 1)
    assert exc.value.node is not None


def test_minkowski():
    for n, res in ((1, 64), (2, (24, 48))):
        g = build_grid(n, res)
        for r in (0.6, 1.7):
            geo = shape_from_radial(np.full(g.shape, r), g)
            for k in range(1, n + 1):
                assert minkowski_residual(geo, k) <= 1e-10
    g = build_grid(1, 256)
    assert minkowski_residual(shape_from_radial(ellipse_rho(g.theta, 2.0, 1.0), g), 1) <= 1e-8
    errs = []
    for res in ((24, 48), (48, 96)):
        g = build_grid(2, res)
        errs.append(minkowski_residual(shape_from_radial(ellipsoid_rho(g), g), 1))
    assert errs[1] <= 1e-4 and errs[0] / errs[1] >= 8


def test_variational_sphere_and_circle():
    g = build_grid(2, (16, 32))
    cfg = FlowConfig("constrained", CurvatureFunctionSpec("quotient", 1, 2), t_end=0.05, stop_at_convergence=False)
    res = run(np.full(g.shape, 1.2), g, cfg)
    for k in range(3):
        assert variational_check(res, k) <= 1e-10
    g1 = build_grid(1, 64)
    res = run(np.ones(64), g1, FlowConfig("parallel", CurvatureFunctionSpec("quotient", 1, 1), t_end=0.3))
    # d/dt length = int kappa = 2 pi, side by side with the closed form 2 pi (1 + t)
    lengths = [quermassintegrals(shape_from_radial(r, g1))[1] * 2 for _, r in res.snapshots]
    assert np.allclose(lengths, [2 * np.pi * (1 + t) for t, _ in res.snapshots], rtol=1e-12)
    assert variational_check(res, 1) <= 1e-6
    assert variational_check(res, 0) <= 1e-6


def test_variational_needs_three_samples():
    fake = SimpleNamespace(snapshots=[(0.0, np.ones(16)), (0.1, np.ones(16))], grid=build_grid(1, 16), config=None)
    with pytest.raises(ValueError):
        variational_check(fake, 1)
