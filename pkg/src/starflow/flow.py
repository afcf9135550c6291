"""Time evolution of radial graphs under normal-speed curvature flows.

The hypersurface ``{rho(y) y}`` moves with outward normal speed

* ``inverse``:      ``1/F``
* ``constrained``:  ``1/F - u/n``
* ``parallel``:     ``1``

which for the radial function reads ``d rho/dt = speed * v`` with
``v = rho/u``. The semi-discrete system is integrated with classical RK4.
On S^2 the tendency is projected onto spherical harmonics of degree at most
``grid.band`` before it is used, so the stable step is set by the isotropic
resolution ``grid.dx_min`` rather than by the converging meridians.
"""

from __future__ import annotations

import logging
import time as _time
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from .curvfun import BOUNDARY_TOL, CurvatureFunctionSpec, InadmissibleCurvature, cone_margin, eval_F, grad_F
from .functionals import af_ratio, minkowski_residual, quermassintegrals
from .geometry import NotStarshaped, ShapeGeometry, shape_from_radial
from .sphere_grid import Grid, band_limit

log = logging.getLogger(__name__)

MODES = ("inverse", "constrained", "parallel")


class FlowError(RuntimeError):
    """Base class for failures of the time integration."""


class AdmissibilityError(FlowError):
    """Curvature left the open cone of the flow's curvature function."""

    def __init__(self, message: str, node=None, margin=None, t=None):
        super().__init__(message)
        self.node = node
        self.margin = margin
        self.t = t


class NumericalFailure(FlowError):
    """Step size underflow or non-finite state.

    ``state`` holds the last accepted state.
    """

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class FlowConfig:
    """Parameters of a flow run.

    Attributes:
        mode: one of ``inverse``, ``constrained``, ``parallel``.
        fspec: curvature function (its degree also selects the admissible cone).
        t_end: final time.
        dt_initial: first step size; ``None`` uses the adaptive rule.
        dt_min: smallest step allowed after repeated halving.
        cfl: safety factor ``c`` of the adaptive step rule.
        osc_tol: constrained runs stop once ``max rho - min rho`` drops below this.
        cadence: output interval of the time series.
        fixed_dt: if set, every step uses this size (still landing on outputs).
        rho_tol, w_tol, a2_factor: monitor tolerances, see :func:`run`.
        keep_snapshots: store ``rho`` at every output time.
        stop_at_convergence: end constrained runs once ``osc_tol`` is met.
    """

    mode: str
    fspec: CurvatureFunctionSpec
    t_end: float = 10.0
    dt_initial: float | None = None
    dt_min: float = 1e-10
    cfl: float = 0.25
    osc_tol: float = 1e-4
    cadence: float = 0.01
    fixed_dt: float | None = None
    rho_tol: float = 1e-8
    w_tol: float = 1e-6
    a2_factor: float = 10.0
    keep_snapshots: bool = True
    stop_at_convergence: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; allowed modes: {', '.join(MODES)}")
        if not self.t_end >= 0:
            raise ValueError("t_end must be non-negative")
        if not self.dt_min > 0:
            raise ValueError("dt_min must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl safety factor must lie in (0, 1]")
        if not self.osc_tol > 0:
            raise ValueError("osc_tol must be positive")
        if not self.cadence > 0:
            raise ValueError("cadence must be positive")
        if self.fixed_dt is not None and not self.fixed_dt > 0:
            raise ValueError("fixed_dt must be positive")

    @property
    def uses_F(self) -> bool:
        return self.mode != "parallel"


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    rho: NDArray
    geom: ShapeGeometry
    step: int = 0
    last_dt: float = 0.0


@dataclass(frozen=True)
class MonitorRecord:
    """Extremes of the quantities controlled by the a priori estimates.

    ``min_w``/``max_w`` are extremes of ``log u + log F``. F-dependent entries
    are NaN when the geometry is not admissible (parallel mode only).
    """

    t: float
    min_rho: float
    max_rho: float
    osc_rho: float
    min_u: float
    max_u: float
    min_F: float
    max_F: float
    max_A2: float
    min_w: float
    max_w: float
    margin: float


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: float
    dt: float
    osc_rho: float
    min_rho: float
    max_rho: float
    min_u: float
    max_u: float
    min_F: float
    max_F: float
    max_A2: float
    admiss_margin: float
    af_ratio: float
    W: tuple[float, ...]
    minkowski: float = float("nan")


@dataclass
class MonitorViolation:
    t: float
    step: int
    name: str
    amount: float


@dataclass
class RunResult:
    final: FlowState
    records: list[TimeSeriesRecord]
    snapshots: list[tuple[float, NDArray]]
    monitors: list[MonitorRecord]
    violations: list[MonitorViolation]
    converged: bool
    grid: Grid
    config: FlowConfig
    min_margin: float = float("inf")
    wall_time: float = 0.0
    rejected_steps: int = 0
    steps: list[float] = field(default_factory=list)


# ---------------------------------------------------------------------------
# spatial operator
# ---------------------------------------------------------------------------


def _curvature_value(geom: ShapeGeometry, fspec: CurvatureFunctionSpec) -> NDArray:
    margin = cone_margin(geom.kappa, fspec.k)
    if np.any(~np.isfinite(margin)) or np.any(margin <= BOUNDARY_TOL):
        flat = np.where(np.isfinite(margin), margin, -np.inf)
        idx = np.unravel_index(int(np.argmin(flat)), margin.shape)
        node = tuple(int(i) for i in idx)
        raise AdmissibilityError(
            f"curvature outside Gamma_{fspec.k} at node {node} (margin {margin[idx]:.3e})",
            node=node,
            margin=float(margin[idx]),
        )
    return eval_F(fspec, geom.kappa)


def normal_speed(mode: str, geom: ShapeGeometry, fspec: CurvatureFunctionSpec) -> NDArray:
    """Outward normal velocity per node.

    Raises:
        AdmissibilityError: F-based mode and some node is not interior to the cone.
    """
    if mode == "parallel":
        return np.ones_like(geom.rho)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    F = _curvature_value(geom, fspec)
    if mode == "inverse":
        return 1.0 / F
    return 1.0 / F - geom.u / geom.n


def rhs(rho: NDArray, grid: Grid, config: FlowConfig, geom: ShapeGeometry | None = None) -> NDArray:
    """Pointwise ``d rho/dt = speed * rho / u``."""
    if geom is None:
        geom = shape_from_radial(rho, grid)
    return normal_speed(config.mode, geom, config.fspec) * geom.v


def tendency(rho: NDArray, grid: Grid, config: FlowConfig) -> tuple[NDArray, ShapeGeometry]:
    """Band-limited right-hand side used by the integrator, with the geometry it came from."""
    geom = shape_from_radial(rho, grid)
    r = rhs(rho, grid, config, geom)
    if not np.all(np.isfinite(r)):
        raise FloatingPointError("non-finite tendency")
    return band_limit(r, grid), geom


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------


def initial_state(rho0: NDArray, grid: Grid, config: FlowConfig) -> FlowState:
    """Validate initial data and wrap it in a state.

    Raises:
        NotStarshaped: ``rho0`` not positive.
        AdmissibilityError: F-based mode with curvature outside the cone.
    """
    rho0 = np.array(grid.check(rho0), dtype=float)
    geom = shape_from_radial(rho0, grid)
    if config.uses_F:
        _curvature_value(geom, config.fspec)
    return FlowState(0.0, rho0, geom)


def stable_dt(state: FlowState, config: FlowConfig) -> float:
    """Adaptive step ``c (dx min rho)^2 (min F)^2 / (n max lambda_max(F'))``.

    Parallel mode uses the hyperbolic rule ``c dx min rho``.
    """
    geom = state.geom
    dx = geom.grid.dx_min
    rmin = float(np.min(state.rho))
    if config.mode == "parallel":
        return config.cfl * dx * rmin
    F = eval_F(config.fspec, geom.kappa)
    lam = float(np.max(grad_F(config.fspec, geom.kappa)))
    return config.cfl * (dx * rmin) ** 2 * float(np.min(F)) ** 2 / (geom.n * lam)


def _rk4(state: FlowState, dt: float, config: FlowConfig) -> FlowState:
    grid = state.geom.grid
    rho = state.rho
    k1, _ = tendency(rho, grid, config)
    k2, _ = tendency(rho + 0.5 * dt * k1, grid, config)
    k3, _ = tendency(rho + 0.5 * dt * k2, grid, config)
    k4, _ = tendency(rho + dt * k3, grid, config)
    new = rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(new)):
        raise FloatingPointError("non-finite state")
    geom = shape_from_radial(new, grid)
    if config.uses_F:
        _curvature_value(geom, config.fspec)
    return FlowState(state.t + dt, new, geom, state.step + 1, dt)


_REJECT = (NotStarshaped, AdmissibilityError, InadmissibleCurvature, FloatingPointError, ValueError)


def step(state: FlowState, dt: float, config: FlowConfig, _stats: dict | None = None) -> FlowState:
    """Advance by one RK4 step, halving ``dt`` until every stage is admissible.

    The returned state records the step size actually taken in ``last_dt``.

    Raises:
        NumericalFailure: ``dt`` fell below ``config.dt_min``; carries the
            input state as the last good one.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    last_exc = None
    while dt >= config.dt_min:
        try:
            with np.errstate(all="raise"):
                return _rk4(state, dt, config)
        except _REJECT as exc:
            last_exc = exc
            if _stats is not None:
                _stats["rejected"] = _stats.get("rejected", 0) + 1
            log.debug("rejected step at t=%.6g dt=%.3g: %s", state.t, dt, exc)
            dt *= 0.5
    raise NumericalFailure(
        f"step size underflow below dt_min={config.dt_min:g} at t={state.t:.6g} ({last_exc})", state=state
    )


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def monitors(state: FlowState, config: FlowConfig) -> MonitorRecord:
    geom = state.geom
    rho, u = state.rho, geom.u
    margin = float(np.min(cone_margin(geom.kappa, config.fspec.k)))
    if margin > BOUNDARY_TOL:
        F = eval_F(config.fspec, geom.kappa)
        w = np.log(u) + np.log(F)
        fmin, fmax, wmin, wmax = float(F.min()), float(F.max()), float(w.min()), float(w.max())
    else:
        fmin = fmax = wmin = wmax = float("nan")
    return MonitorRecord(
        t=state.t,
        min_rho=float(rho.min()),
        max_rho=float(rho.max()),
        osc_rho=float(rho.max() - rho.min()),
        min_u=float(u.min()),
        max_u=float(u.max()),
        min_F=fmin,
        max_F=fmax,
        max_A2=float(geom.norm_A2.max()),
        min_w=wmin,
        max_w=wmax,
        margin=margin,
    )


def _time_record(state: FlowState, mon: MonitorRecord, config: FlowConfig) -> TimeSeriesRecord:
    geom = state.geom
    k = config.fspec.k
    W = quermassintegrals(geom)
    try:
        ratio = af_ratio(geom, k)
    except ValueError:
        ratio = float("nan")
    return TimeSeriesRecord(
        t=state.t,
        dt=state.last_dt,
        osc_rho=mon.osc_rho,
        min_rho=mon.min_rho,
        max_rho=mon.max_rho,
        min_u=mon.min_u,
        max_u=mon.max_u,
        min_F=mon.min_F,
        max_F=mon.max_F,
        max_A2=mon.max_A2,
        admiss_margin=mon.margin,
        af_ratio=ratio,
        W=tuple(float(x) for x in W),
        minkowski=minkowski_residual(geom, k),
    )


def _check_monitors(prev: MonitorRecord, cur: MonitorRecord, first: MonitorRecord, config, step_no, out):
    """Discrete versions of the maximum-principle bounds (constrained mode only)."""
    checks = [
        ("max_rho_increase", cur.max_rho - prev.max_rho, config.rho_tol),
        ("min_rho_decrease", prev.min_rho - cur.min_rho, config.rho_tol),
        ("max_w_increase", cur.max_w - prev.max_w, config.w_tol),
        ("min_w_decrease", prev.min_w - cur.min_w, config.w_tol),
        ("max_A2_bound", cur.max_A2 - config.a2_factor * first.max_A2, 0.0),
    ]
    for name, amount, tol in checks:
        if not amount <= tol:
            out.append(MonitorViolation(cur.t, step_no, name, float(amount)))


def run(rho0: NDArray, grid: Grid, config: FlowConfig, progress: bool = False) -> RunResult:
    """Integrate from ``rho0`` to ``t_end`` or until ``osc rho < osc_tol``.

    Diagnostics are recorded at t=0, every ``cadence``, and at the final time.
    In constrained mode every accepted step is checked against the
    maximum-principle consequences: max rho non-increasing and min rho
    non-decreasing (``rho_tol``), the same for ``log u + log F`` (``w_tol``),
    and ``max |A|^2 <= a2_factor * initial``. Failures are collected in
    ``RunResult.violations``; they do not stop the run.

    Raises:
        NotStarshaped, AdmissibilityError: invalid initial data.
        NumericalFailure: dt underflow; the exception carries the last good state.
    """
    t0 = _time.perf_counter()
    state = initial_state(rho0, grid, config)
    mon0 = monitors(state, config)
    first = prev = mon0
    mons = [mon0]
    # a zero-length run has no output interval, hence no rows
    records = [_time_record(state, mon0, config)] if config.t_end > 0 else []
    snaps = [(0.0, state.rho.copy())] if config.keep_snapshots and config.t_end > 0 else []
    violations: list[MonitorViolation] = []
    min_margin = mon0.margin
    stats: dict = {}
    dts: list[float] = []
    stop_on_osc = config.mode == "constrained" and config.stop_at_convergence
    converged = stop_on_osc and mon0.osc_rho < config.osc_tol
    out_index = 1
    eps_t = 1e-12 * max(1.0, config.t_end)
    while not converged and state.t < config.t_end - eps_t:
        next_out = min(out_index * config.cadence, config.t_end)
        if config.fixed_dt is not None:
            dt = config.fixed_dt
        elif state.step == 0 and config.dt_initial is not None:
            dt = config.dt_initial
        else:
            dt = stable_dt(state, config)
        dt = min(dt, next_out - state.t)
        # avoid a sliver step right before an output time
        if next_out - state.t - dt < 0.25 * dt:
            dt = next_out - state.t
        state = step(state, dt, config, stats)
        dts.append(state.last_dt)
        mon = monitors(state, config)
        if config.mode == "constrained":
            _check_monitors(prev, mon, first, config, state.step, violations)
        min_margin = min(min_margin, mon.margin)
        prev = mon
        mons.append(mon)
        converged = stop_on_osc and mon.osc_rho < config.osc_tol
        hit_output = abs(state.t - next_out) <= eps_t
        if hit_output:
            state = replace(state, t=next_out)
            out_index += 1
        if hit_output or converged or state.t >= config.t_end - eps_t:
            records.append(_time_record(state, mon, config))
            if config.keep_snapshots:
                snaps.append((state.t, state.rho.copy()))
            if progress and hit_output:
                log.info("t=%.4g osc=%.3e dt=%.3e", state.t, mon.osc_rho, state.last_dt)
    return RunResult(
        final=state,
        records=records,
        snapshots=snaps,
        monitors=mons,
        violations=violations,
        converged=converged,
        grid=grid,
        config=config,
        min_margin=min_margin,
        wall_time=_time.perf_counter() - t0,
        rejected_steps=stats.get("rejected", 0),
        steps=dts,
    )
