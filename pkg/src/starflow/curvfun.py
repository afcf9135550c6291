"""Symmetric curvature functions of the principal curvatures.

Everything here is vectorized over leading axes: a curvature tuple is an array
whose last axis has length ``n``. The normalized curvature functions are

* quotient family, degree k:  ``f = n k / (n - k + 1) * s_k / s_{k-1}``
* root family, degree k:      ``f = n / binom(n, k)**(1/k) * s_k**(1/k)``

both scaled so that ``f(1, ..., 1) = n``. They are 1-homogeneous, strictly
monotone and concave on the Garding cone ``Gamma_k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from numpy.typing import ArrayLike, NDArray

BOUNDARY_TOL = 1e-12
COINCIDENCE_TOL = 1e-8

FAMILIES = ("quotient", "root")


class InadmissibleCurvature(ValueError):
    """Curvature tuple outside the closed cone on which the function is defined.

    Attributes:
        index: flat index of the worst tuple in the input batch.
        margin: cone margin ``min_m s_m`` at that tuple.
    """

    def __init__(self, message: str, index: int | None = None, margin: float | None = None):
        super().__init__(message)
        self.index = index
        self.margin = margin


@dataclass(frozen=True)
class CurvatureFunctionSpec:
    """A normalized quotient or root curvature function of degree ``k`` in ``n`` variables."""

    family: str
    k: int
    n: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"degree k={self.k} must satisfy 1 <= k <= n={self.n}")

    @property
    def constant(self) -> float:
        n, k = self.n, self.k
        if self.family == "quotient":
            return n * k / (n - k + 1)
        return n / comb(n, k) ** (1.0 / k)


def _as_kappa(kappa: ArrayLike) -> NDArray[np.float64]:
    kappa = np.asarray(kappa, dtype=float)
    if kappa.ndim == 0:
        raise ValueError("curvature tuple must have at least one entry")
    return kappa


def elementary_symmetric_all(kappa: ArrayLike) -> NDArray[np.float64]:
    """All of ``s_0..s_n``, shape ``(..., n + 1)``.

    Coefficients of ``prod_i (1 + kappa_i t)`` built one factor at a time.
    """
    kappa = _as_kappa(kappa)
    n = kappa.shape[-1]
    e = np.zeros(kappa.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        ki = kappa[..., i : i + 1]
        e[..., 1 : i + 2] = e[..., 1 : i + 2] + ki * e[..., 0 : i + 1]
    return e


def elementary_symmetric(kappa: ArrayLike, k: int) -> NDArray[np.float64] | float:
    """``s_k(kappa)`` for ``0 <= k <= n``."""
    kappa = _as_kappa(kappa)
    n = kappa.shape[-1]
    if not 0 <= k <= n:
        raise ValueError(f"k={k} out of range 0..{n}")
    out = elementary_symmetric_all(kappa)[..., k]
    return float(out) if out.ndim == 0 else out


def _removed(kappa: NDArray, drop: tuple[int, ...]) -> NDArray:
    keep = [i for i in range(kappa.shape[-1]) if i not in drop]
    return kappa[..., keep]


def _esym_removed(kappa: NDArray, drop: tuple[int, ...], k: int) -> NDArray:
    """``s_k`` of ``kappa`` with the entries in ``drop`` deleted (0 if k is out of range)."""
    rest = _removed(kappa, drop)
    m = rest.shape[-1]
    if k < 0 or k > m:
        return np.zeros(kappa.shape[:-1])
    if m == 0:
        return np.ones(kappa.shape[:-1])
    return elementary_symmetric_all(rest)[..., k]


def grad_elementary(kappa: ArrayLike, k: int) -> NDArray[np.float64]:
    """Gradient of ``s_k``: entry i is ``s_{k-1}`` of kappa with ``kappa_i`` removed."""
    kappa = _as_kappa(kappa)
    n = kappa.shape[-1]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    return np.stack([_esym_removed(kappa, (i,), k - 1) for i in range(n)], axis=-1)


def hess_elementary(kappa: ArrayLike, k: int) -> NDArray[np.float64]:
    """Second partials of ``s_k``; zero diagonal, ``s_{k-2}`` of kappa minus {i, j} off it."""
    kappa = _as_kappa(kappa)
    n = kappa.shape[-1]
    out = np.zeros(kappa.shape + (n,))
    if k < 2:
        return out
    for i in range(n):
        for j in range(i + 1, n):
            v = _esym_removed(kappa, (i, j), k - 2)
            out[..., i, j] = v
            out[..., j, i] = v
    return out


def power_sums(kappa: ArrayLike, kmax: int | None = None) -> NDArray[np.float64]:
    """``p_1..p_kmax`` with ``p_m = sum_i kappa_i**m``; shape ``(..., kmax)``."""
    kappa = _as_kappa(kappa)
    kmax = kappa.shape[-1] if kmax is None else kmax
    return np.stack([np.sum(kappa**m, axis=-1) for m in range(1, kmax + 1)], axis=-1)


def elementary_from_power_sums(p: ArrayLike) -> NDArray[np.float64]:
    """Newton's identities: ``s_0..s_K`` from ``p_1..p_K``.

    ``k s_k = sum_{i=1}^{k} (-1)^(i-1) s_{k-i} p_i``.
    """
    p = np.asarray(p, dtype=float)
    K = p.shape[-1]
    e = np.zeros(p.shape[:-1] + (K + 1,))
    e[..., 0] = 1.0
    for k in range(1, K + 1):
        acc = np.zeros(p.shape[:-1])
        for i in range(1, k + 1):
            acc = acc + (-1) ** (i - 1) * e[..., k - i] * p[..., i - 1]
        e[..., k] = acc / k
    return e


def cone_margin(kappa: ArrayLike, k: int) -> NDArray[np.float64]:
    """``min(s_1, ..., s_k)``; positive exactly on the open cone ``Gamma_k``."""
    kappa = _as_kappa(kappa)
    n = kappa.shape[-1]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    return np.min(elementary_symmetric_all(kappa)[..., 1 : k + 1], axis=-1)


def cone_membership(kappa: ArrayLike, k: int):
    """Whether ``kappa`` lies in the open Garding cone ``Gamma_k``, and the margin.

    Returns ``(inside, margin)`` with ``margin = min_{m<=k} s_m``; for a batch
    both are arrays.
    """
    margin = cone_margin(kappa, k)
    inside = margin > 0
    if np.ndim(margin) == 0:
        return bool(inside), float(margin)
    return inside, margin


def _check_closure(kappa: NDArray, k: int) -> NDArray:
    margin = cone_margin(kappa, k)
    bad = margin <= -BOUNDARY_TOL
    if np.any(bad):
        flat = np.ravel(margin)
        idx = int(np.argmin(flat))
        raise InadmissibleCurvature(
            f"curvature tuple outside closure of Gamma_{k}: margin {flat[idx]:.3e} at index {idx}",
            index=idx,
            margin=float(flat[idx]),
        )
    return margin


def _check_interior(kappa: NDArray, k: int) -> None:
    margin = cone_margin(kappa, k)
    bad = margin <= BOUNDARY_TOL
    if np.any(bad):
        flat = np.ravel(margin)
        idx = int(np.argmin(flat))
        raise InadmissibleCurvature(
            f"curvature tuple not interior to Gamma_{k}: margin {flat[idx]:.3e} at index {idx}",
            index=idx,
            margin=float(flat[idx]),
        )


def _check_spec(spec: CurvatureFunctionSpec, kappa: NDArray) -> None:
    if kappa.shape[-1] != spec.n:
        raise ValueError(f"curvature tuple has {kappa.shape[-1]} entries, spec expects n={spec.n}")


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def eval_F(spec: CurvatureFunctionSpec, kappa: ArrayLike):
    """Normalized curvature function value.

    Tuples on the cone boundary (margin within ``BOUNDARY_TOL`` of zero)
    evaluate to 0.

    Raises:
        InadmissibleCurvature: some tuple lies outside the closed cone.
    """
    kappa = _as_kappa(kappa)
    _check_spec(spec, kappa)
    margin = _check_closure(kappa, spec.k)
    e = elementary_symmetric_all(kappa)
    sk = e[..., spec.k]
    on_boundary = margin <= BOUNDARY_TOL
    if spec.family == "quotient":
        den = e[..., spec.k - 1]
        safe = np.where(den > 0, den, 1.0)
        val = spec.constant * sk / safe
    else:
        val = spec.constant * np.maximum(sk, 0.0) ** (1.0 / spec.k)
    val = np.where(on_boundary, 0.0, val)
    return _scalar(val)


def _first_second(spec: CurvatureFunctionSpec, kappa: NDArray, second: bool):
    k = spec.k
    c = spec.constant
    e = elementary_symmetric_all(kappa)
    a = e[..., k]
    da = grad_elementary(kappa, k)
    if spec.family == "quotient":
        b = e[..., k - 1][..., None]
        if k >= 2:
            db = grad_elementary(kappa, k - 1)
        else:
            db = np.zeros_like(kappa)
        a_ = a[..., None]
        grad = c * (da * b - a_ * db) / b**2
        if not second:
            return grad, None
        dda = hess_elementary(kappa, k)
        ddb = hess_elementary(kappa, k - 1)
        bb = b[..., None]
        aa = a_[..., None]
        outer = lambda x, y: x[..., :, None] * y[..., None, :]  # noqa: E731
        hess = c * (
            dda / bb
            - (outer(da, db) + outer(db, da)) / bb**2
            - aa * ddb / bb**2
            + 2 * aa * outer(db, db) / bb**3
        )
        return grad, hess
    p = 1.0 / k
    a_ = a[..., None]
    grad = c * p * a_ ** (p - 1) * da
    if not second:
        return grad, None
    dda = hess_elementary(kappa, k)
    aa = a_[..., None]
    hess = c * (p * aa ** (p - 1) * dda + p * (p - 1) * aa ** (p - 2) * da[..., :, None] * da[..., None, :])
    return grad, hess


def grad_F(spec: CurvatureFunctionSpec, kappa: ArrayLike) -> NDArray[np.float64]:
    """Partials ``df/dkappa_i`` of the normalized function; requires interior tuples."""
    kappa = _as_kappa(kappa)
    _check_spec(spec, kappa)
    _check_interior(kappa, spec.k)
    return _first_second(spec, kappa, second=False)[0]


def hess_F(spec: CurvatureFunctionSpec, kappa: ArrayLike) -> NDArray[np.float64]:
    """Matrix of second partials ``d^2 f / dkappa_i dkappa_j``."""
    kappa = _as_kappa(kappa)
    _check_spec(spec, kappa)
    _check_interior(kappa, spec.k)
    return _first_second(spec, kappa, second=True)[1]


def hess_quadratic_form(spec: CurvatureFunctionSpec, kappa: ArrayLike, eta: ArrayLike):
    """Second derivative ``d^2F(A)(eta, eta)`` of the operator function.

    ``eta`` is a symmetric matrix written in an eigenbasis of ``A`` (whose
    eigenvalues are ``kappa``). Off-diagonal entries enter through the
    difference quotients ``(f_i - f_j)/(kappa_i - kappa_j)``; when
    ``|kappa_i - kappa_j| < COINCIDENCE_TOL`` the quotient is replaced by its
    limit ``f_ii - f_ij``.
    """
    kappa = _as_kappa(kappa)
    eta = np.asarray(eta, dtype=float)
    _check_spec(spec, kappa)
    n = spec.n
    if eta.shape[-2:] != (n, n):
        raise ValueError(f"eta must be {n}x{n}, got {eta.shape}")
    if not np.allclose(eta, np.swapaxes(eta, -1, -2), rtol=0, atol=1e-14 * (1 + np.abs(eta).max())):
        raise ValueError("eta must be symmetric")
    _check_interior(kappa, spec.k)
    grad, hess = _first_second(spec, kappa, second=True)
    diag = np.diagonal(eta, axis1=-2, axis2=-1)
    total = np.einsum("...i,...ij,...j->...", diag, hess, diag)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dk = kappa[..., i] - kappa[..., j]
            close = np.abs(dk) < COINCIDENCE_TOL
            quot = (grad[..., i] - grad[..., j]) / np.where(close, 1.0, dk)
            limit = hess[..., i, i] - hess[..., i, j]
            total = total + np.where(close, limit, quot) * eta[..., i, j] * eta[..., j, i]
    return _scalar(total)


def newton_maclaurin_gap(kappa: ArrayLike, k: int):
    """``(n-k)/(k+1) s_k - (n-k+1)/k s_{k-1} s_{k+1} / s_k``.

    Non-negative on ``Gamma_{k+1}``, zero at umbilic tuples.

    Raises:
        ValueError: ``k`` outside ``1..n-1`` or ``s_k <= 0``.
    """
    kappa = _as_kappa(kappa)
    n = kappa.shape[-1]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k={k} out of range 1..{n - 1}")
    e = elementary_symmetric_all(kappa)
    sk = e[..., k]
    if np.any(sk <= 0):
        raise ValueError("newton_maclaurin_gap requires s_k > 0")
    gap = (n - k) / (k + 1) * sk - (n - k + 1) / k * e[..., k - 1] * e[..., k + 1] / sk
    return _scalar(gap)
