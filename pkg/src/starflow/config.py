"""Run configuration documents (JSON) and their validation.

A minimal document::

    {"dim": 2, "grid": [48, 96], "shape": {"sphere": 1.0},
     "mode": "constrained", "f": {"family": "quotient", "k": 1}, "t_end": 1.0}

Keys and defaults:

=====================  ==========================================================
``dim``                sphere dimension, 1 or 2 (required)
``grid``               ``N`` for dim 1, ``[N_theta, N_phi]`` for dim 2 (required)
``shape``              one of ``{"sphere": r}``, ``{"ellipsoid": [a, ...]}``,
                       ``{"fourier": {"a": [...], "b": [...]}}`` (dim 1),
                       ``{"harmonic": [[l, m, eps], ...]}`` (dim 2) (required)
``mode``               ``inverse``, ``constrained`` or ``parallel`` (required)
``f``                  ``{"family": "quotient"|"root", "k": k}`` (required)
``t_end``              10.0
``dt_initial``         null (adaptive)
``dt_min``             1e-10
``cfl``                0.25
``osc_tol``            1e-4
``cadence``            0.01
``fixed_dt``           null
``monitor``            ``{"rho_tol": 1e-8, "w_tol": 1e-6, "a2_factor": 10.0}``
``fd_order``           8
``seed``               0
``out``                null (output directory, overridden by ``--out``)
``checks``             ``{"variational": false, "af": true}``
``allow_inadmissible`` false (parallel mode only)
=====================  ==========================================================
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .curvfun import FAMILIES, CurvatureFunctionSpec
from .flow import MODES, FlowConfig
from .shapes import ShapeDescriptor
from .sphere_grid import Grid, build_grid


class ConfigError(ValueError):
    """Malformed or invalid configuration document."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


_TOP_KEYS = {
    "dim", "grid", "shape", "mode", "f", "t_end", "dt_initial", "dt_min", "cfl", "osc_tol",
    "cadence", "fixed_dt", "monitor", "fd_order", "seed", "out", "checks", "allow_inadmissible",
}
_REQUIRED = ("dim", "grid", "shape", "mode", "f")
_MONITOR_DEFAULTS = {"rho_tol": 1e-8, "w_tol": 1e-6, "a2_factor": 10.0}
_CHECK_DEFAULTS = {"variational": False, "af": True}


@dataclass(frozen=True)
class RunConfig:
    dim: int
    grid: tuple[int, ...]
    shape: ShapeDescriptor
    mode: str
    family: str
    k: int
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
    fd_order: int = 8
    seed: int = 0
    out: str | None = None
    checks: tuple[tuple[str, bool], ...] = field(default_factory=lambda: tuple(sorted(_CHECK_DEFAULTS.items())))
    allow_inadmissible: bool = False

    @property
    def fspec(self) -> CurvatureFunctionSpec:
        return CurvatureFunctionSpec(self.family, self.k, self.dim)

    def check_enabled(self, name: str) -> bool:
        return dict(self.checks).get(name, False)

    def build_grid(self) -> Grid:
        res = self.grid[0] if self.dim == 1 else self.grid
        return build_grid(self.dim, res, fd_order=self.fd_order)

    def flow_config(self) -> FlowConfig:
        return FlowConfig(
            mode=self.mode,
            fspec=self.fspec,
            t_end=self.t_end,
            dt_initial=self.dt_initial,
            dt_min=self.dt_min,
            cfl=self.cfl,
            osc_tol=self.osc_tol,
            cadence=self.cadence,
            fixed_dt=self.fixed_dt,
            rho_tol=self.rho_tol,
            w_tol=self.w_tol,
            a2_factor=self.a2_factor,
        )

    def to_dict(self) -> dict:
        d = {
            "dim": self.dim,
            "grid": self.grid[0] if self.dim == 1 else list(self.grid),
            "shape": _shape_to_doc(self.shape),
            "mode": self.mode,
            "f": {"family": self.family, "k": self.k},
            "t_end": self.t_end,
            "dt_initial": self.dt_initial,
            "dt_min": self.dt_min,
            "cfl": self.cfl,
            "osc_tol": self.osc_tol,
            "cadence": self.cadence,
            "fixed_dt": self.fixed_dt,
            "monitor": {"rho_tol": self.rho_tol, "w_tol": self.w_tol, "a2_factor": self.a2_factor},
            "fd_order": self.fd_order,
            "seed": self.seed,
            "out": self.out,
            "checks": dict(self.checks),
            "allow_inadmissible": self.allow_inadmissible,
        }
        return d


def serialize_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2)


def _shape_to_doc(shape: ShapeDescriptor) -> dict:
    if shape.kind == "sphere":
        return {"sphere": shape.params[0]}
    if shape.kind == "ellipsoid":
        return {"ellipsoid": list(shape.params)}
    if shape.kind == "fourier":
        return {"fourier": {"a": list(shape.params[0]), "b": list(shape.params[1])}}
    return {"harmonic": [list(t) for t in shape.params]}


def _number(doc: dict, key: str, default=None, positive=False, allow_none=False, nonneg=False):
    val = doc.get(key, default)
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{key} must be a number, got {val!r}")
    val = float(val)
    if positive and not val > 0:
        raise ConfigError(f"{key} must be positive, got {val!r}")
    if nonneg and not val >= 0:
        raise ConfigError(f"{key} must be non-negative, got {val!r}")
    return val


def _integer(val, key: str) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{key} must be an integer, got {val!r}")
    return val


def _parse_shape(doc, dim: int) -> ShapeDescriptor:
    if not isinstance(doc, dict) or len(doc) != 1:
        raise ConfigError("shape must be an object with exactly one kind key")
    (kind, val), = doc.items()
    try:
        if kind == "sphere":
            desc = ShapeDescriptor.sphere(_number(doc, "sphere"))
        elif kind == "ellipsoid":
            if not isinstance(val, list):
                raise ConfigError("ellipsoid expects a list of semi-axes")
            desc = ShapeDescriptor.ellipsoid(*val)
        elif kind == "fourier":
            if not isinstance(val, dict) or set(val) - {"a", "b"}:
                raise ConfigError("fourier expects an object with keys 'a' and/or 'b'")
            desc = ShapeDescriptor.fourier(val.get("a", []), val.get("b", []))
        elif kind == "harmonic":
            if not isinstance(val, list):
                raise ConfigError("harmonic expects a list of [l, m, eps] triples")
            desc = ShapeDescriptor.harmonic(val)
        else:
            raise ConfigError(f"unknown shape kind {kind!r}; allowed: sphere, ellipsoid, fourier, harmonic")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {kind} shape: {exc}") from exc
    if not desc.dim_ok(dim):
        raise ConfigError(f"shape {kind} does not fit dim={dim}")
    return desc


def _sub_table(doc: dict, key: str, defaults: dict, kind) -> dict:
    sub = doc.get(key, {})
    if not isinstance(sub, dict):
        raise ConfigError(f"{key} must be an object")
    unknown = set(sub) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown key(s) in {key}: {', '.join(sorted(unknown))}")
    out = dict(defaults)
    for name, v in sub.items():
        if kind is bool:
            if not isinstance(v, bool):
                raise ConfigError(f"{key}.{name} must be true or false")
            out[name] = v
        else:
            out[name] = _number(sub, name, positive=True)
    return out


def config_from_dict(doc: dict) -> RunConfig:
    """Validate an already-decoded document."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(unknown))}")
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    dim = _integer(doc["dim"], "dim")
    if dim not in (1, 2):
        raise ConfigError(f"dim must be 1 or 2, got {dim}")
    grid = doc["grid"]
    if dim == 1:
        if isinstance(grid, list) and len(grid) == 1:
            grid = grid[0]
        grid = (_integer(grid, "grid"),)
    else:
        if not isinstance(grid, list) or len(grid) != 2:
            raise ConfigError("grid for dim 2 must be [N_theta, N_phi]")
        grid = tuple(_integer(g, "grid") for g in grid)

    mode = doc["mode"]
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; allowed modes: {', '.join(MODES)}")
    f = doc["f"]
    if not isinstance(f, dict) or set(f) != {"family", "k"}:
        raise ConfigError("f must be an object with keys 'family' and 'k'")
    if f["family"] not in FAMILIES:
        raise ConfigError(f"unknown family {f['family']!r}; allowed: {', '.join(FAMILIES)}")
    k = _integer(f["k"], "f.k")
    if not 1 <= k <= dim:
        raise ConfigError(f"f.k must lie in 1..{dim}, got {k}")

    monitor = _sub_table(doc, "monitor", _MONITOR_DEFAULTS, float)
    checks = _sub_table(doc, "checks", _CHECK_DEFAULTS, bool)
    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a string path or null")
    allow = doc.get("allow_inadmissible", False)
    if not isinstance(allow, bool):
        raise ConfigError("allow_inadmissible must be true or false")
    if allow and mode != "parallel":
        raise ConfigError("allow_inadmissible is only meaningful for parallel mode")
    cfl = _number(doc, "cfl", 0.25, positive=True)
    if cfl > 1:
        raise ConfigError(f"cfl must lie in (0, 1], got {cfl}")
    fd_order = _integer(doc.get("fd_order", 8), "fd_order")
    if fd_order not in (4, 6, 8):
        raise ConfigError(f"fd_order must be one of 4, 6, 8, got {fd_order}")

    cfg = RunConfig(
        dim=dim,
        grid=grid,
        shape=_parse_shape(doc["shape"], dim),
        mode=mode,
        family=f["family"],
        k=k,
        t_end=_number(doc, "t_end", 10.0, nonneg=True),
        dt_initial=_number(doc, "dt_initial", None, positive=True, allow_none=True),
        dt_min=_number(doc, "dt_min", 1e-10, positive=True),
        cfl=cfl,
        osc_tol=_number(doc, "osc_tol", 1e-4, positive=True),
        cadence=_number(doc, "cadence", 0.01, positive=True),
        fixed_dt=_number(doc, "fixed_dt", None, positive=True, allow_none=True),
        rho_tol=monitor["rho_tol"],
        w_tol=monitor["w_tol"],
        a2_factor=monitor["a2_factor"],
        fd_order=fd_order,
        seed=_integer(doc.get("seed", 0), "seed"),
        out=out,
        checks=tuple(sorted(checks.items())),
        allow_inadmissible=allow,
    )
    try:
        cfg.build_grid()
    except ValueError as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON configuration document.

    Raises:
        ConfigError: syntax error (with line number), unknown key, missing
            key or out-of-range value.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error: {exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    return config_from_dict(doc)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
