"""Initial radial functions: spheres, ellipsoids and perturbed spheres."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import sph_harm_y

from .geometry import AdmissibilityReport, NotStarshaped, admissibility_report, shape_from_radial
from .sphere_grid import Grid

KINDS = ("sphere", "ellipsoid", "fourier", "harmonic")


class InitialAdmissibilityError(ValueError):
    """Initial shape has curvature outside the cone required by the flow."""

    def __init__(self, message: str, report: AdmissibilityReport):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class ShapeDescriptor:
    """Parametric description of an initial starshaped shape.

    * ``sphere``: ``params = (r,)``
    * ``ellipsoid``: ``params`` = semi-axes ``(a_1, ..., a_{n+1})``
    * ``fourier`` (n=1): ``params = ((a_1, ..., a_M), (b_1, ..., b_M))`` for
      ``1 + sum_m a_m cos(m theta) + b_m sin(m theta)``
    * ``harmonic`` (n=2): ``params = ((l, m, eps), ...)`` for
      ``1 + sum eps Y_lm`` with orthonormal real spherical harmonics
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}; allowed: {', '.join(KINDS)}")
        if self.kind == "sphere":
            if len(self.params) != 1 or not self.params[0] > 0:
                raise ValueError("sphere radius must be a positive number")
        elif self.kind == "ellipsoid":
            if not self.params or any(not a > 0 for a in self.params):
                raise ValueError("ellipsoid semi-axes must be positive")
        elif self.kind == "fourier":
            if len(self.params) != 2:
                raise ValueError("fourier shape needs cosine and sine coefficient lists")
        else:
            for term in self.params:
                if len(term) != 3:
                    raise ValueError("harmonic terms are (l, m, eps) triples")
                l, m, _ = term
                if int(l) != l or int(m) != m or l < 0 or abs(m) > l:
                    raise ValueError(f"invalid spherical harmonic index (l={l}, m={m})")

    @classmethod
    def sphere(cls, r: float) -> ShapeDescriptor:
        return cls("sphere", (float(r),))

    @classmethod
    def ellipsoid(cls, *axes: float) -> ShapeDescriptor:
        return cls("ellipsoid", tuple(float(a) for a in axes))

    @classmethod
    def fourier(cls, a=(), b=()) -> ShapeDescriptor:
        return cls("fourier", (tuple(float(x) for x in a), tuple(float(x) for x in b)))

    @classmethod
    def harmonic(cls, terms) -> ShapeDescriptor:
        return cls("harmonic", tuple((int(l), int(m), float(e)) for l, m, e in terms))

    def dim_ok(self, n: int) -> bool:
        if self.kind == "ellipsoid":
            return len(self.params) == n + 1
        if self.kind == "fourier":
            return n == 1
        if self.kind == "harmonic":
            return n == 2
        return True


def real_harmonic(l: int, m: int, theta: NDArray, phi: NDArray) -> NDArray:
    """Orthonormal real spherical harmonic ``Y_lm`` (``m < 0`` gives the sine branch)."""
    if m == 0:
        return np.real(sph_harm_y(l, 0, theta, phi))
    y = sph_harm_y(l, abs(m), theta, phi)
    part = np.real(y) if m > 0 else np.imag(y)
    return np.sqrt(2.0) * (-1) ** m * part


def radial_values(desc: ShapeDescriptor, grid: Grid) -> NDArray:
    """Sample the radial function of ``desc`` at the grid nodes (no validation of sign)."""
    n = grid.dim
    if not desc.dim_ok(n):
        raise ValueError(f"shape {desc.kind} with parameters {desc.params} does not fit a grid on S^{n}")
    if desc.kind == "sphere":
        return np.full(grid.shape, desc.params[0])
    if desc.kind == "ellipsoid":
        y = grid.unit_vectors()
        a = np.asarray(desc.params)
        return np.sum(y**2 / a**2, axis=-1) ** -0.5
    if desc.kind == "fourier":
        t = grid.theta
        rho = np.ones(grid.shape)
        a, b = desc.params
        for m, c in enumerate(a, start=1):
            rho = rho + c * np.cos(m * t)
        for m, c in enumerate(b, start=1):
            rho = rho + c * np.sin(m * t)
        return rho
    theta, phi = grid.mesh()
    rho = np.ones(grid.shape)
    for l, m, eps in desc.params:
        rho = rho + eps * real_harmonic(l, m, theta, phi)
    return rho


def init_shape(
    desc: ShapeDescriptor, grid: Grid, cone_k: int | None = None, allow_inadmissible: bool = False
) -> tuple[NDArray, AdmissibilityReport | None]:
    """Radial samples of ``desc`` with an admissibility report for ``Gamma_{cone_k}``.

    Raises:
        NotStarshaped: some sample is not positive.
        InitialAdmissibilityError: curvature leaves the open cone at some node
            and ``allow_inadmissible`` is false.
    """
    rho = radial_values(desc, grid)
    bad = ~(rho > 0)
    if np.any(bad):
        node = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NotStarshaped(f"shape is not starshaped: rho={rho[node]:.6g} at node {node}", node=node)
    if cone_k is None:
        return rho, None
    report = admissibility_report(shape_from_radial(rho, grid), cone_k)
    if not report.admissible and not allow_inadmissible:
        count = int(np.sum(report.margins <= 0))
        raise InitialAdmissibilityError(
            f"initial shape is not in Gamma_{cone_k} at {count} node(s); worst node {report.worst_node} "
            f"with margin {report.min_margin:.4g}",
            report,
        )
    return rho, report
