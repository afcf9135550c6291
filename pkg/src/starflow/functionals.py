"""Integral geometry of starshaped domains: quermassintegrals and their identities.

Conventions (``n`` = dimension of the boundary, ``omega`` = unit ball volume)::

    W_0 = 1/(n+1) * int u dmu                       (enclosed volume)
    W_k = 1/((n+1) binom(n, k-1)) * int s_{k-1} dmu,   1 <= k <= n+1

so that ``W_k(B) = omega`` for every k, and the parallel-body volume is the
Steiner polynomial ``sum_{k=0}^{n+1} binom(n+1, k) W_k eps^k``.
"""

from __future__ import annotations

from math import comb, gamma, pi

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import cKDTree

from .curvfun import elementary_symmetric_all, eval_F
from .geometry import ShapeGeometry, admissibility_report, shape_from_radial
from .sphere_grid import build_grid, resample


class NotKConvex(ValueError):
    """The geometry leaves the closed Garding cone required by the inequality."""

    def __init__(self, message: str, node=None, margin=None):
        super().__init__(message)
        self.node = node
        self.margin = margin


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^{n+1}."""
    d = n + 1
    return pi ** (d / 2) / gamma(d / 2 + 1)


def _integrate(geom: ShapeGeometry, f: NDArray) -> float:
    return float(np.sum(f * geom.area_weight))


def quermassintegrals(geom: ShapeGeometry) -> NDArray[np.float64]:
    """``W_0..W_{n+1}`` by quadrature over the boundary."""
    n = geom.n
    s = elementary_symmetric_all(geom.kappa)
    W = np.empty(n + 2)
    W[0] = _integrate(geom, geom.u) / (n + 1)
    for k in range(1, n + 2):
        W[k] = _integrate(geom, s[..., k - 1]) / ((n + 1) * comb(n, k - 1))
    return W


def steiner_polynomial(W: NDArray, eps: float) -> float:
    """``sum_{k=0}^{n+1} binom(n+1, k) W_k eps^k`` for ``W = (W_0, ..., W_{n+1})``."""
    if eps < 0:
        raise ValueError("offset must be non-negative")
    W = np.asarray(W, dtype=float)
    d = W.size - 1
    return float(sum(comb(d, k) * W[k] * eps**k for k in range(d + 1)))


def af_ratio(geom: ShapeGeometry, k: int) -> float:
    """``(W_{k+1}/W_{k+1}(B)) / (W_k/W_k(B))**((n-k)/(n+1-k))``; at least 1 for k-convex domains.

    Raises:
        NotKConvex: some principal-curvature tuple lies outside the closed
            cone ``Gamma_k`` (within the usual 1e-12 boundary band).
    """
    n = geom.n
    if not 0 <= k <= n:
        raise ValueError(f"k={k} out of range 0..{n}")
    if k >= 1:
        rep = admissibility_report(geom, k)
        if rep.min_margin <= -1e-12:
            raise NotKConvex(
                f"domain is not {k}-convex: margin {rep.min_margin:.3e} at node {rep.worst_node}",
                node=rep.worst_node,
                margin=rep.min_margin,
            )
    W = quermassintegrals(geom)
    wb = unit_ball_volume(n)
    return float((W[k + 1] / wb) / (W[k] / wb) ** ((n - k) / (n + 1 - k)))


def minkowski_residual(geom: ShapeGeometry, k: int) -> float:
    """Relative residual of ``(n-k+1) int s_{k-1} = k int u s_k``."""
    n = geom.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    s = elementary_symmetric_all(geom.kappa)
    lhs = (n - k + 1) * _integrate(geom, s[..., k - 1])
    rhs = k * _integrate(geom, geom.u * s[..., k])
    den = abs(lhs) + abs(rhs)
    return 0.0 if den == 0 else abs(lhs - rhs) / den


# ---------------------------------------------------------------------------
# Monte-Carlo parallel body
# ---------------------------------------------------------------------------


def _refined_geometry(geom: ShapeGeometry, factor: int) -> ShapeGeometry:
    grid = geom.grid
    if grid.dim == 1:
        fine = build_grid(1, grid.shape[0] * factor)
    else:
        fine = build_grid(2, (grid.shape[0] * factor, grid.shape[1] * factor))
    return shape_from_radial(resample(geom.rho, grid, fine), fine)


class _RadialLookup:
    """Radial function at arbitrary directions via a fine grid plus local interpolation."""

    def __init__(self, geom: ShapeGeometry):
        from scipy.interpolate import RegularGridInterpolator

        grid = geom.grid
        self.dim = grid.dim
        if grid.dim == 1:
            t = np.concatenate([grid.theta, [2 * np.pi]])
            r = np.concatenate([geom.rho, geom.rho[:1]])
            self._interp = RegularGridInterpolator((t,), r, method="cubic")
        else:
            nt, nphi = grid.shape
            # pad one row across each pole and one column of longitude wrap
            rho = geom.rho
            shift = nphi // 2
            top = np.roll(rho[:2][::-1], shift, axis=1)
            bot = np.roll(rho[-2:][::-1], shift, axis=1)
            ext = np.concatenate([top, rho, bot], axis=0)
            ext = np.concatenate([ext[:, -2:], ext, ext[:, :2]], axis=1)
            th = np.concatenate([-grid.theta[:2][::-1], grid.theta, 2 * np.pi - grid.theta[-2:][::-1]])
            ph = np.concatenate([grid.phi[-2:] - 2 * np.pi, grid.phi, grid.phi[:2] + 2 * np.pi])
            self._interp = RegularGridInterpolator((th, ph), ext, method="cubic")

    def __call__(self, x: NDArray) -> NDArray:
        r = np.linalg.norm(x, axis=-1)
        if self.dim == 1:
            t = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * np.pi)
            return self._interp(t[:, None])
        th = np.arccos(np.clip(x[:, 2] / np.where(r > 0, r, 1.0), -1.0, 1.0))
        ph = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * np.pi)
        return self._interp(np.stack([th, ph], axis=-1))


def parallel_volume_oracle(
    geom: ShapeGeometry,
    eps: float,
    samples: int = 1_000_000,
    seed: int = 0,
    refine: int | None = None,
    shard: int = 100_000,
) -> tuple[float, float]:
    """Monte-Carlo volume of ``{x : dist(x, Omega) <= eps}`` with its standard error.

    Uniform samples in the bounding box count when they lie inside the domain
    (radial test against an interpolated radial function) or within ``eps``
    of a dense sampling of the boundary (nearest neighbour). The boundary is
    densified by spectral resampling of ``rho`` onto a grid ``refine`` times
    finer. Shards draw from child seeds of ``seed``, so the result depends
    only on ``(seed, samples, shard)``.

    Raises:
        ValueError: ``samples < 1e5`` or negative ``eps``.
    """
    if samples < 100_000:
        raise ValueError("sample budget must be at least 1e5")
    if eps < 0:
        raise ValueError("offset must be non-negative")
    n = geom.n
    if refine is None:
        refine = 64 if n == 1 else 4
    fine = _refined_geometry(geom, refine)
    cloud = fine.x_amb.reshape(-1, n + 1)
    if not np.all(np.isfinite(cloud)):
        raise ValueError("degenerate geometry: non-finite boundary points")
    tree = cKDTree(cloud)
    lookup = _RadialLookup(fine)
    lo = cloud.min(axis=0) - eps
    hi = cloud.max(axis=0) + eps
    box = float(np.prod(hi - lo))
    children = np.random.SeedSequence(seed).spawn((samples + shard - 1) // shard)
    hits = 0
    done = 0
    for child in children:
        m = min(shard, samples - done)
        rng = np.random.default_rng(child)
        pts = lo + (hi - lo) * rng.random((m, n + 1))
        inside = np.linalg.norm(pts, axis=1) <= lookup(pts)
        if eps > 0:
            rest = ~inside
            d, _ = tree.query(pts[rest], distance_upper_bound=eps * (1 + 1e-12) + 1e-300)
            near = np.isfinite(d)
            hits += int(inside.sum() + near.sum())
        else:
            hits += int(inside.sum())
        done += m
    p = hits / samples
    return box * p, box * np.sqrt(p * (1 - p) / samples)


# ---------------------------------------------------------------------------
# variational identity along a run
# ---------------------------------------------------------------------------


def _variation_sides(geom: ShapeGeometry, speed: NDArray, magnitude: NDArray, k: int):
    """Integral ``I_k``, right-hand side of ``d/dt I_k`` and a magnitude for that right-hand side.

    ``I_0 = int u`` with ``d/dt I_0 = (n+1) int speed``; for k >= 1
    ``I_k = int s_{k-1}`` with ``d/dt I_k = k int speed s_k``. ``speed`` is the
    outward normal velocity and ``magnitude`` bounds the size of the terms it is
    made of, so the returned scale reflects cancellation inside the speed.
    """
    n = geom.n
    s = elementary_symmetric_all(geom.kappa)
    if k == 0:
        weight = np.full_like(speed, n + 1.0)
        value = _integrate(geom, geom.u)
    else:
        weight = k * s[..., k]
        value = _integrate(geom, s[..., k - 1])
    return value, _integrate(geom, weight * speed), _integrate(geom, np.abs(weight) * magnitude)


def _speed_magnitude(mode: str, geom: ShapeGeometry, fspec, speed: NDArray) -> NDArray:
    if mode == "constrained":
        return 1.0 / eval_F(fspec, geom.kappa) + geom.u / geom.n
    return np.abs(speed)


def variational_check(result, k: int) -> float:
    """Worst relative mismatch between centered differences of ``I_k(t)`` and its variation formula.

    ``result`` is a :class:`~starflow.flow.RunResult` with stored snapshots at
    a uniform cadence. At each interior snapshot the centered difference
    ``(I(t+dt) - I(t-dt)) / (2 dt)`` is compared with the right-hand side
    evaluated at that snapshot. The mismatch is divided by the integral of
    the right-hand integrand with the speed replaced by the magnitude of its
    terms (``1/F + u/n`` in constrained mode), which stays meaningful when the
    two terms cancel, as on a stationary sphere.

    Raises:
        ValueError: fewer than 3 snapshots.
    """
    from .flow import normal_speed

    snaps = result.snapshots
    if len(snaps) < 3:
        raise ValueError("variational check needs at least 3 snapshots")
    grid = result.grid
    cfg = result.config
    if not 0 <= k <= grid.dim:
        raise ValueError(f"k={k} out of range 0..{grid.dim}")
    times = np.array([t for t, _ in snaps])
    vals, rhs, scale = [], [], []
    for _, rho in snaps:
        geom = shape_from_radial(rho, grid)
        sp = normal_speed(cfg.mode, geom, cfg.fspec)
        a, b, c = _variation_sides(geom, sp, _speed_magnitude(cfg.mode, geom, cfg.fspec, sp), k)
        vals.append(a)
        rhs.append(b)
        scale.append(c)
    worst = 0.0
    for i in range(1, len(snaps) - 1):
        h1 = times[i] - times[i - 1]
        h2 = times[i + 1] - times[i]
        if abs(h1 - h2) > 1e-9 * max(h1, h2):
            continue
        lhs = (vals[i + 1] - vals[i - 1]) / (h1 + h2)
        diff = abs(lhs - rhs[i])
        if diff == 0:
            continue
        worst = max(worst, diff / scale[i] if scale[i] > 0 else np.inf)
    return worst
