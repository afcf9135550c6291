"""Discrete calculus on the round circle and the round 2-sphere.

Node layouts:

* ``n = 1``: ``N`` equispaced angles ``theta_i = 2*pi*i/N``; derivatives are
  Fourier-spectral and the quadrature is the periodic trapezoid rule.
* ``n = 2``: half-cell offset colatitudes ``theta_j = (j + 1/2)*pi/Ntheta``
  (no node sits on a pole) and longitudes ``phi_k = 2*pi*k/Nphi``. Longitudinal
  derivatives are Fourier-spectral. Colatitudinal derivatives are centered
  finite differences applied per longitudinal wavenumber, with ghost rows taken
  across the pole from ``f(-theta, phi) = f(theta, phi + pi)``. The quadrature
  is Fejer's first rule in ``cos(theta)`` times the uniform rule in ``phi``.

Fields are plain arrays whose leading axes match ``grid.shape``. Covectors
carry one trailing axis of length ``n``; symmetric 2-tensors carry two.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Grid",
    "build_grid",
    "sigma_gradient",
    "sigma_hessian",
    "sigma_laplacian",
    "integrate_sigma",
    "band_limit",
    "resample",
]

# Centered stencils: offsets -p..p, coefficients for d/dx and d^2/dx^2.
_FD_FIRST = {
    4: np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12]),
    6: np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60]),
    8: np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280]),
}
_FD_SECOND = {
    4: np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]),
    6: np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90]),
    8: np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560]),
}


class GridError(ValueError):
    """Raised for unsupported grid parameters or incongruent fields."""


@dataclass(frozen=True, eq=False)
class Grid:
    """Node layout, quadrature weights and stencil data for S^1 or S^2.

    Use :func:`build_grid` rather than constructing this directly.

    Attributes:
        dim: sphere dimension ``n`` (1 or 2).
        shape: node array shape, ``(N,)`` or ``(Ntheta, Nphi)``.
        theta: colatitudes (n=2) or angles (n=1), 1-D.
        phi: longitudes for n=2, ``None`` for n=1.
        weights: per-node quadrature weights for the round measure.
        dx_min: smallest resolved length scale on the unit sphere; for n=2
            this is ``pi/L`` with ``L`` the band limit of :func:`band_limit`.
        fd_order: order of the colatitudinal difference stencils (n=2).
    """

    dim: int
    shape: tuple[int, ...]
    theta: NDArray[np.float64]
    phi: NDArray[np.float64] | None
    weights: NDArray[np.float64]
    dx_min: float
    fd_order: int = 8
    band: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def area(self) -> float:
        """Total measure of the unit sphere, 2*pi or 4*pi."""
        return 2 * np.pi if self.dim == 1 else 4 * np.pi

    def mesh(self) -> tuple[NDArray, ...]:
        """Node coordinates broadcast to ``shape``: ``(theta,)`` or ``(theta, phi)``."""
        if self.dim == 1:
            return (self.theta,)
        return tuple(np.meshgrid(self.theta, self.phi, indexing="ij"))

    def unit_vectors(self) -> NDArray[np.float64]:
        """Embedding of the nodes in R^{n+1}; trailing axis of length n+1."""
        if self.dim == 1:
            t = self.theta
            return np.stack([np.cos(t), np.sin(t)], axis=-1)
        th, ph = self.mesh()
        st = np.sin(th)
        return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1)

    def tangent_frame(self) -> NDArray[np.float64]:
        """Coordinate derivatives of :meth:`unit_vectors`, shape ``(*shape, n, n+1)``."""
        if self.dim == 1:
            t = self.theta
            return np.stack([-np.sin(t), np.cos(t)], axis=-1)[:, None, :]
        th, ph = self.mesh()
        ct, st = np.cos(th), np.sin(th)
        cp, sp = np.cos(ph), np.sin(ph)
        e_th = np.stack([ct * cp, ct * sp, -st], axis=-1)
        e_ph = np.stack([-st * sp, st * cp, np.zeros_like(th)], axis=-1)
        return np.stack([e_th, e_ph], axis=-2)

    def metric(self) -> NDArray[np.float64]:
        """Round metric ``sigma`` per node, shape ``(*shape, n, n)``."""
        if self.dim == 1:
            return np.ones(self.shape + (1, 1))
        th, _ = self.mesh()
        s = np.zeros(self.shape + (2, 2))
        s[..., 0, 0] = 1.0
        s[..., 1, 1] = np.sin(th) ** 2
        return s

    def check(self, f: NDArray, trailing: int = 0) -> NDArray:
        f = np.asarray(f)
        lead = f.shape[: f.ndim - trailing] if trailing else f.shape
        if lead != self.shape:
            raise GridError(f"field shape {f.shape} is not congruent with grid shape {self.shape}")
        return f


def _fejer_weights(n: int) -> NDArray[np.float64]:
    """Fejer's first rule on the Chebyshev points cos((j + 1/2) pi / n), for dx on [-1, 1]."""
    theta = (np.arange(n) + 0.5) * np.pi / n
    k = np.arange(1, n // 2 + 1)
    s = np.cos(2 * np.outer(theta, k)) / (4 * k**2 - 1)
    return (2.0 / n) * (1 - 2 * s.sum(axis=1))


def _band_projectors(theta: NDArray, weights_theta: NDArray, nm: int, band: int) -> NDArray:
    """Per-wavenumber weighted least-squares projectors onto degree <= band harmonics.

    For wavenumber m the span of the associated Legendre functions of degree
    m..band is sin(theta)^m times polynomials in cos(theta) of degree band - m,
    so a Chebyshev basis times sin^m spans the same space with good conditioning.
    """
    nt = theta.size
    x = np.cos(theta)
    s = np.sin(theta)
    sw = np.sqrt(weights_theta)
    proj = np.zeros((nm, nt, nt))
    for m in range(nm):
        if m > band:
            continue
        deg = band - m
        basis = np.polynomial.chebyshev.chebvander(x, deg) * (s**m)[:, None]
        a = sw[:, None] * basis
        proj[m] = basis @ np.linalg.pinv(a, rcond=1e-13) * sw[None, :]
    return proj


def build_grid(n: int, resolution, fd_order: int = 8) -> Grid:
    """Build a grid on S^n.

    Args:
        n: sphere dimension, 1 or 2.
        resolution: ``N`` (or ``(N,)``) for n=1; ``(Ntheta, Nphi)`` for n=2.
        fd_order: colatitudinal stencil order for n=2 (4, 6 or 8).

    Raises:
        GridError: unsupported dimension or resolution below the minimum.
    """
    if n not in (1, 2):
        raise GridError(f"unsupported dimension n={n}; only n in {{1, 2}} is supported")
    res = np.atleast_1d(np.asarray(resolution, dtype=int)).tolist()
    if n == 1:
        if len(res) != 1:
            raise GridError(f"n=1 takes a single node count, got {resolution!r}")
        (N,) = res
        if N < 8:
            raise GridError(f"resolution below minimum: N={N} < 8")
        theta = 2 * np.pi * np.arange(N) / N
        weights = np.full(N, 2 * np.pi / N)
        return Grid(1, (N,), theta, None, weights, dx_min=2 * np.pi / N, fd_order=0, band=N // 2)

    if len(res) != 2:
        raise GridError(f"n=2 takes (Ntheta, Nphi), got {resolution!r}")
    nt, nphi = res
    if nt < 8 or nphi < 16 or nphi % 2:
        raise GridError(f"resolution below minimum: need Ntheta>=8 and even Nphi>=16, got {nt}x{nphi}")
    if fd_order not in _FD_FIRST:
        raise GridError(f"fd_order must be one of {sorted(_FD_FIRST)}")
    theta = (np.arange(nt) + 0.5) * np.pi / nt
    phi = 2 * np.pi * np.arange(nphi) / nphi
    wt = _fejer_weights(nt)
    weights = np.outer(wt, np.full(nphi, 2 * np.pi / nphi))
    band = min(nt - 1, nphi // 2 - 1)
    grid = Grid(2, (nt, nphi), theta, phi, weights, dx_min=np.pi / band, fd_order=fd_order, band=band)
    grid._cache["proj"] = _band_projectors(theta, wt, nphi // 2 + 1, band)
    return grid


# ---------------------------------------------------------------------------
# spectral / finite-difference kernels
# ---------------------------------------------------------------------------


def _wavenumbers(n: int) -> NDArray:
    return np.fft.rfftfreq(n, d=1.0 / n)


def _periodic_diff(f: NDArray, order: int, axis: int = -1) -> NDArray:
    """Fourier derivative of a real periodic array along ``axis`` (period 2*pi)."""
    n = f.shape[axis]
    F = np.fft.rfft(f, axis=axis)
    k = _wavenumbers(n)
    if order == 1:
        mult = 1j * k
        if n % 2 == 0:
            mult[-1] = 0.0
    elif order == 2:
        mult = -(k**2)
    else:
        raise ValueError(order)
    shape = [1] * f.ndim
    shape[axis] = k.size
    return np.fft.irfft(F * mult.reshape(shape), n=n, axis=axis)


def _theta_stencil(F: NDArray, sign: NDArray, coeffs: NDArray, h: float, power: int) -> NDArray:
    """Apply a centered stencil along axis 0 of ``F`` with across-pole ghost rows.

    ``sign[m]`` is the factor relating the ghost row at -theta to the row at
    theta for wavenumber column m.
    """
    p = coeffs.size // 2
    nt = F.shape[0]
    top = F[p - 1 :: -1] * sign
    bot = F[nt - 1 : nt - 1 - p : -1] * sign
    ext = np.concatenate([top, F, bot], axis=0)
    out = np.zeros_like(F)
    for i, c in enumerate(coeffs):
        if c != 0.0:
            out += c * ext[i : i + nt]
    return out / h**power


def _partials_s2(grid: Grid, f: NDArray, parity: int = 1):
    """First and second coordinate partials of ``f`` on S^2.

    ``parity`` is +1 for a scalar and -1 for quantities that change sign when
    the colatitude direction is reflected through a pole (e.g. theta-components
    of covectors). Returns ``(f_t, f_p, f_tt, f_tp, f_pp)``.
    """
    nt, nphi = grid.shape
    h = np.pi / nt
    m = _wavenumbers(nphi)
    sign = parity * np.where(m.astype(int) % 2 == 0, 1.0, -1.0)
    F = np.fft.rfft(f, axis=1)
    ik = 1j * m
    ik[-1] = 0.0
    c1 = _FD_FIRST[grid.fd_order]
    c2 = _FD_SECOND[grid.fd_order]
    Ft = _theta_stencil(F, sign, c1, h, 1)
    Ftt = _theta_stencil(F, sign, c2, h, 2)
    Fp = F * ik
    Fpp = F * (-(m**2))
    Ftp = Ft * ik
    back = lambda G: np.fft.irfft(G, n=nphi, axis=1)  # noqa: E731
    return back(Ft), back(Fp), back(Ftt), back(Ftp), back(Fpp)


def coordinate_partials(f: NDArray, grid: Grid, parity: int = 1):
    """Coordinate first partials (``(*shape, n)``) and second partials (``(*shape, n, n)``)."""
    f = grid.check(f)
    if grid.dim == 1:
        d1 = _periodic_diff(f, 1)
        d2 = _periodic_diff(f, 2)
        return d1[..., None], d2[..., None, None]
    ft, fp, ftt, ftp, fpp = _partials_s2(grid, f, parity)
    d1 = np.stack([ft, fp], axis=-1)
    d2 = np.empty(grid.shape + (2, 2))
    d2[..., 0, 0] = ftt
    d2[..., 0, 1] = d2[..., 1, 0] = ftp
    d2[..., 1, 1] = fpp
    return d1, d2


def sigma_gradient(f: NDArray, grid: Grid) -> NDArray:
    """Covector components ``df`` in the coordinate frame, shape ``(*shape, n)``."""
    f = grid.check(f)
    if grid.dim == 1:
        return _periodic_diff(f, 1)[..., None]
    ft, fp, *_ = _partials_s2(grid, f)
    return np.stack([ft, fp], axis=-1)


def _christoffel_correct(grid: Grid, d1: NDArray, d2: NDArray) -> NDArray:
    th, _ = grid.mesh()
    hess = d2.copy()
    cot = np.cos(th) / np.sin(th)
    hess[..., 0, 1] -= cot * d1[..., 1]
    hess[..., 1, 0] = hess[..., 0, 1]
    hess[..., 1, 1] += np.sin(th) * np.cos(th) * d1[..., 0]
    return hess


def sigma_hessian(f: NDArray, grid: Grid) -> NDArray:
    """Covariant Hessian of ``f`` for the round metric, shape ``(*shape, n, n)``."""
    d1, d2 = coordinate_partials(f, grid)
    if grid.dim == 1:
        return d2
    return _christoffel_correct(grid, d1, d2)


def sigma_derivatives(f: NDArray, grid: Grid) -> tuple[NDArray, NDArray]:
    """Gradient and covariant Hessian of ``f`` in one pass."""
    d1, d2 = coordinate_partials(f, grid)
    if grid.dim == 1:
        return d1, d2
    return d1, _christoffel_correct(grid, d1, d2)


def sigma_laplacian(f: NDArray, grid: Grid) -> NDArray:
    hess = sigma_hessian(f, grid)
    if grid.dim == 1:
        return hess[..., 0, 0]
    th, _ = grid.mesh()
    return hess[..., 0, 0] + hess[..., 1, 1] / np.sin(th) ** 2


def integrate_sigma(f: NDArray, grid: Grid) -> float:
    """Quadrature of ``f`` against the round measure.

    The reduction runs over the row-major flattened products, which numpy sums
    in a fixed pairwise order independent of thread count.
    """
    f = grid.check(f)
    prod = (np.asarray(f, dtype=float) * grid.weights).ravel()
    return float(np.sum(prod))


def band_limit(f: NDArray, grid: Grid) -> NDArray:
    """Project ``f`` onto spherical harmonics of degree <= ``grid.band`` (n=2).

    Removes the longitudinal modes near the poles that the grid cannot resolve
    isotropically; smooth fields pass through up to spectrally small error.
    For n=1 the field is returned unchanged.
    """
    f = grid.check(f)
    if grid.dim == 1:
        return np.array(f, dtype=float)
    nphi = grid.shape[1]
    F = np.fft.rfft(f, axis=1)
    G = np.einsum("mij,jm->im", grid._cache["proj"], F)
    return np.fft.irfft(G, n=nphi, axis=1)


# ---------------------------------------------------------------------------
# spectral interpolation
# ---------------------------------------------------------------------------


def _trig_eval(coef: NDArray, x0: float, period_n: int, targets: NDArray) -> NDArray:
    """Evaluate the trigonometric interpolant with FFT ``coef`` (axis 0) at ``targets``.

    Samples were taken at ``x0 + 2*pi*j/period_n``. An even-length Nyquist
    mode is interpolated by a cosine so real data stay real.
    """
    q = np.fft.fftfreq(period_n, d=1.0 / period_n)
    E = np.exp(1j * np.outer(targets - x0, q))
    if period_n % 2 == 0:
        E[:, period_n // 2] = np.cos(0.5 * period_n * (targets - x0))
    return (E @ coef) / period_n


def resample(f: NDArray, grid: Grid, new: Grid) -> NDArray:
    """Spectrally interpolate a scalar field from ``grid`` onto ``new``.

    For n=2 each longitudinal mode is extended across both poles to a
    2*pi-periodic function of colatitude and interpolated with Fourier series.
    """
    f = grid.check(f)
    if new.dim != grid.dim:
        raise GridError("cannot resample between grids of different dimension")
    if grid.dim == 1:
        N = grid.shape[0]
        return _trig_eval(np.fft.fft(f), 0.0, N, new.theta).real
    nt, nphi = grid.shape
    F = np.fft.rfft(f, axis=1) / nphi
    m = np.arange(F.shape[1])
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    ext = np.concatenate([F, F[::-1] * sign], axis=0)
    C = np.fft.fft(ext, axis=0)
    rows = _trig_eval(C, np.pi / (2 * nt), 2 * nt, new.theta)
    n2t, n2p = new.shape
    G = np.zeros((n2t, n2p // 2 + 1), dtype=complex)
    mm = min(F.shape[1], G.shape[1])
    G[:, :mm] = rows[:, :mm]
    if nphi % 2 == 0 and mm == nphi // 2 + 1 and n2p > nphi:
        G[:, nphi // 2] *= 0.5
    return np.fft.irfft(G * n2p, n=n2p, axis=1)
