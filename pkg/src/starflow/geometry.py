"""Extrinsic geometry of radial graphs ``{rho(y) y : y in S^n}``.

With ``w = log(rho)`` and the round-sphere covariant Hessian ``w_{;ij}``::

    v    = sqrt(1 + |dw|^2_sigma)
    g_ij = rho^2 (sigma_ij + w_i w_j)
    h_ij = (rho / v) (sigma_ij + w_i w_j - w_{;ij})
    u    = rho / v

Principal curvatures are the eigenvalues of ``g^{-1} h``, computed from the
symmetric matrix ``L^{-1} h L^{-T}`` with ``g = L L^T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .curvfun import cone_margin
from .sphere_grid import Grid, coordinate_partials, sigma_derivatives


class NotStarshaped(ValueError):
    """Radial function is not strictly positive (or not finite) on the grid."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


@dataclass(frozen=True, eq=False)
class ShapeGeometry:
    """Per-node extrinsic geometry of a radial graph.

    Tensor fields carry trailing ``(n, n)`` axes in the coordinate frame of
    the grid; ``x_amb`` and ``nu_amb`` carry a trailing axis of length n+1.
    """

    grid: Grid
    rho: NDArray
    dlogrho: NDArray
    v: NDArray
    u: NDArray
    g: NDArray
    h: NDArray
    A: NDArray
    kappa: NDArray
    area_weight: NDArray
    x_amb: NDArray
    nu_amb: NDArray

    @property
    def n(self) -> int:
        return self.grid.dim

    @property
    def area(self) -> float:
        return float(np.sum(self.area_weight))

    @property
    def norm_A2(self) -> NDArray:
        """``|A|^2 = sum_i kappa_i^2``."""
        return np.sum(self.kappa**2, axis=-1)


def _inv_small(m: NDArray) -> NDArray:
    n = m.shape[-1]
    if n == 1:
        return 1.0 / m
    if n == 2:
        a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
        det = a * d - b * c
        out = np.empty_like(m)
        out[..., 0, 0] = d / det
        out[..., 0, 1] = -b / det
        out[..., 1, 0] = -c / det
        out[..., 1, 1] = a / det
        return out
    return np.linalg.inv(m)


def principal_curvatures(g: NDArray, h: NDArray) -> NDArray:
    """Ascending eigenvalues of ``g^{-1} h`` for symmetric ``h`` and SPD ``g``.

    Works on stacks with trailing ``(n, n)`` axes. For n <= 2 the symmetric
    reduction is solved in closed form.

    Raises:
        ValueError: ``g`` is not positive definite somewhere.
    """
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    n = g.shape[-1]
    if n == 1:
        if np.any(g[..., 0, 0] <= 0):
            raise ValueError("metric is not positive definite")
        return (h[..., 0, 0] / g[..., 0, 0])[..., None]
    if n == 2:
        a, b, c = g[..., 0, 0], g[..., 0, 1], g[..., 1, 1]
        det = a * c - b * b
        if np.any(a <= 0) or np.any(det <= 0):
            raise ValueError("metric is not positive definite")
        l11 = np.sqrt(a)
        l21 = b / l11
        l22 = np.sqrt(det / a)
        # M = L^{-1} h L^{-T}
        p = h[..., 0, 0] / a
        q = (h[..., 0, 1] - l21 * h[..., 0, 0] / l11) / (l11 * l22)
        r = (h[..., 1, 1] - 2 * l21 * h[..., 0, 1] / l11 + l21**2 * h[..., 0, 0] / a) / l22**2
        mean = 0.5 * (p + r)
        rad = np.hypot(0.5 * (p - r), q)
        return np.stack([mean - rad, mean + rad], axis=-1)
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise ValueError("metric is not positive definite") from exc
    Linv = np.linalg.inv(L)
    M = Linv @ h @ np.swapaxes(Linv, -1, -2)
    return np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))


def shape_from_radial(rho: NDArray, grid: Grid) -> ShapeGeometry:
    """Assemble the full extrinsic geometry of the radial graph of ``rho``.

    Raises:
        NotStarshaped: ``rho <= 0`` or non-finite somewhere.
        FloatingPointError: derivatives came out non-finite.
    """
    rho = np.asarray(grid.check(rho), dtype=float)
    bad = ~np.isfinite(rho) | (rho <= 0)
    if np.any(bad):
        node = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NotStarshaped(f"radial function not positive at node {node} (rho={rho[node]!r})", node=node)
    n = grid.dim
    w = np.log(rho)
    dw, hw = sigma_derivatives(w, grid)
    if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(hw))):
        raise FloatingPointError("non-finite derivative of log(rho)")
    sigma = grid.metric()
    sigma_inv = _inv_small(sigma)
    dw_up = np.einsum("...ij,...j->...i", sigma_inv, dw)
    grad2 = np.einsum("...i,...i->...", dw, dw_up)
    v = np.sqrt(1.0 + grad2)
    ww = dw[..., :, None] * dw[..., None, :]
    r2 = (rho**2)[..., None, None]
    g = r2 * (sigma + ww)
    h = (rho / v)[..., None, None] * (sigma + ww - hw)
    A = _inv_small(g) @ h
    kappa = principal_curvatures(g, h)
    y = grid.unit_vectors()
    frame = grid.tangent_frame()
    x_amb = rho[..., None] * y
    nu_amb = (y - np.einsum("...i,...ia->...a", dw_up, frame)) / v[..., None]
    return ShapeGeometry(
        grid=grid,
        rho=rho,
        dlogrho=dw,
        v=v,
        u=rho / v,
        g=g,
        h=h,
        A=A,
        kappa=kappa,
        area_weight=rho**n * v * grid.weights,
        x_amb=x_amb,
        nu_amb=nu_amb,
    )


@dataclass(frozen=True)
class AdmissibilityReport:
    """Cone margins ``min_{m<=k} s_m(kappa)`` per node and their global minimum."""

    k: int
    margins: NDArray
    min_margin: float
    worst_node: tuple[int, ...]
    admissible: bool

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "min_margin": self.min_margin,
            "worst_node": list(self.worst_node),
            "admissible": self.admissible,
            "inadmissible_nodes": int(np.sum(self.margins <= 0)),
        }


def admissibility_report(geom: ShapeGeometry, k: int) -> AdmissibilityReport:
    margins = cone_margin(geom.kappa, k)
    idx = np.unravel_index(int(np.argmin(margins)), margins.shape)
    worst = tuple(int(i) for i in idx)
    mn = float(margins[idx])
    return AdmissibilityReport(k, margins, mn, worst, bool(mn > 0))


def offset_point_cloud(geom: ShapeGeometry, eps: float) -> NDArray:
    """Points ``x + eps * nu`` of the parallel hypersurface, shape ``(nodes, n+1)``."""
    if eps < 0:
        raise ValueError("offset must be non-negative")
    pts = geom.x_amb + eps * geom.nu_amb
    return pts.reshape(-1, geom.n + 1)


def theta_deriv_residual(geom: ShapeGeometry, grid: Grid, full: bool = False):
    """Residual of ``1/2 Hess_g |x|^2 = g - u h`` with Hess_g built from the computed metric.

    The Christoffel symbols come from differentiating the components of ``g``
    on the grid, so this checks the assembled geometry against itself rather
    than against the formulas used to build it.

    Returns the sup-norm of the tensor residual, or with ``full=True`` the
    tuple ``(sup, tensor_residual, trace_residual)`` where the trace residual
    is ``1/2 tr_g Hess_g |x|^2 - (n - u H)`` computed independently.
    """
    n = grid.dim
    f = geom.rho**2
    d1, d2 = coordinate_partials(f, grid)
    g = geom.g
    if n == 1:
        dg = coordinate_partials(g[..., 0, 0], grid)[0][..., 0]
        gamma = 0.5 * dg / g[..., 0, 0]
        hess = (d2[..., 0, 0] - gamma * d1[..., 0])[..., None, None]
    else:
        parity = {(0, 0): 1, (0, 1): -1, (1, 1): 1}
        dg = np.empty(grid.shape + (2, 2, 2))  # dg[..., i, j, l] = d_l g_ij
        for (i, j), par in parity.items():
            comp = coordinate_partials(g[..., i, j], grid, parity=par)[0]
            dg[..., i, j, :] = comp
            dg[..., j, i, :] = comp
        ginv = _inv_small(g)
        # Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
        lower = 0.5 * (
            np.einsum("...jli->...ijl", dg) + np.einsum("...ilj->...ijl", dg) - dg
        )
        gamma = np.einsum("...kl,...ijl->...kij", ginv, lower)
        hess = d2 - np.einsum("...kij,...k->...ij", gamma, d1)
    resid = 0.5 * hess - (g - geom.u[..., None, None] * geom.h)
    sup = float(np.max(np.abs(resid)))
    if not full:
        return sup
    ginv = _inv_small(g)
    H = np.sum(geom.kappa, axis=-1)
    trace_resid = 0.5 * np.einsum("...ij,...ji->...", ginv, hess) - (n - geom.u * H)
    return sup, resid, trace_resid
