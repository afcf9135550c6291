import csv
import io
import json

import numpy as np
import pytest

from starflow.cli import main
from starflow.config import ConfigError, RunConfig, config_from_dict, parse_config, serialize_config
from starflow.geometry import NotStarshaped, shape_from_radial
from starflow.io import MeshExportError, export_mesh, read_timeseries, timeseries_header, write_timeseries
from starflow.shapes import InitialAdmissibilityError, ShapeDescriptor, init_shape, real_harmonic
from starflow.sphere_grid import build_grid

MINIMAL = {
    "dim": 2,
    "grid": [48, 96],
    "shape": {"sphere": 1.0},
    "mode": "constrained",
    "f": {"family": "quotient", "k": 1},
    "t_end": 1.0,
}


# --- shapes ---------------------------------------------------------------


def test_sphere_and_ellipse_shapes():
    g = build_grid(2, (8, 16))
    rho, rep = init_shape(ShapeDescriptor.sphere(1.3), g, cone_k=2)
    assert np.all(rho == 1.3) and rep.admissible
    g1 = build_grid(1, 16)
    rho, _ = init_shape(ShapeDescriptor.ellipsoid(2.0, 1.0), g1)
    assert rho[0] == pytest.approx(2.0)
    assert rho[4] == pytest.approx(1.0)


def test_fourier_dumbbell_rejected():
    g = build_grid(1, 128)
    with pytest.raises(InitialAdmissibilityError, match="worst node") as exc:
        init_shape(ShapeDescriptor.fourier(a=[0.0, 0.45]), g, cone_k=1)
    assert exc.value.report.min_margin < 0
    rho, rep = init_shape(ShapeDescriptor.fourier(a=[0.0, 0.45]), g, cone_k=1, allow_inadmissible=True)
    assert not rep.admissible


def test_non_starshaped_shape():
    g = build_grid(1, 32)
    with pytest.raises(NotStarshaped):
        init_shape(ShapeDescriptor.fourier(a=[1.5]), g)


def test_real_harmonics_orthonormal():
    g = build_grid(2, (32, 64))
    th, ph = g.mesh()
    Y10 = np.sqrt(3 / (4 * np.pi)) * np.cos(th)
    assert np.allclose(real_harmonic(1, 0, th, ph), Y10, atol=1e-14)
    Y = [real_harmonic(l, m, th, ph) for l in range(4) for m in range(-l, l + 1)]
    gram = np.array([[np.sum(a * b * g.weights) for b in Y] for a in Y])
    assert np.abs(gram - np.eye(len(Y))).max() < 1e-10


def test_shape_dimension_mismatch():
    with pytest.raises(ValueError):
        init_shape(ShapeDescriptor.harmonic([(2, 0, 0.1)]), build_grid(1, 32))


# --- config ---------------------------------------------------------------


def test_minimal_config():
    cfg = parse_config(json.dumps(MINIMAL))
    assert cfg.grid == (48, 96) and cfg.shape == ShapeDescriptor.sphere(1.0)
    assert cfg.fspec.k == 1 and cfg.t_end == 1.0


def test_default_t_end():
    doc = dict(MINIMAL)
    del doc["t_end"]
    assert config_from_dict(doc).t_end == 10.0


@pytest.mark.parametrize(
    "patch,match",
    [
        ({"mode": "banana"}, "inverse, constrained, parallel"),
        ({"colour": "red"}, "unknown key"),
        ({"dim": 3}, "dim"),
        ({"f": {"family": "quotient", "k": 3}}, "f.k"),
        ({"cfl": 2.0}, "cfl"),
        ({"osc_tol": 0}, "osc_tol"),
        ({"grid": [4, 8]}, "grid"),
        ({"shape": {"fourier": {"a": [0.1]}}}, "does not fit"),
        ({"monitor": {"rho_tol": 1e-8, "extra": 1}}, "unknown key"),
    ],
)
def test_config_errors(patch, match):
    doc = dict(MINIMAL) | patch
    with pytest.raises(ConfigError, match=match):
        config_from_dict(doc)


def test_syntax_error_carries_line():
    with pytest.raises(ConfigError) as exc:
        parse_config('{\n  "dim": 2,\n  "grid": [48, 96],,\n}')
    assert exc.value.line == 3


@pytest.mark.parametrize(
    "shape",
    [{"sphere": 2.0}, {"ellipsoid": [1.5, 1.0, 0.8]}, {"harmonic": [[2, 1, 0.1], [3, -2, 0.05]]}],
)
def test_round_trip(shape):
    cfg = config_from_dict(dict(MINIMAL) | {"shape": shape, "checks": {"variational": True}, "seed": 4})
    assert parse_config(serialize_config(cfg)) == cfg


def test_round_trip_circle():
    doc = {"dim": 1, "grid": 64, "shape": {"fourier": {"a": [0.1], "b": [0.0, 0.05]}}, "mode": "parallel",
           "f": {"family": "root", "k": 1}, "fixed_dt": 0.01}
    cfg = config_from_dict(doc)
    assert isinstance(cfg, RunConfig)
    assert parse_config(serialize_config(cfg)) == cfg


# --- io -------------------------------------------------------------------


def test_header_and_column_count():
    assert timeseries_header(2) == (
        "t,dt,osc_rho,min_rho,max_rho,min_u,max_u,min_F,max_F,max_A2,admiss_margin,af_ratio,W0,W1,W2,W3"
    ).split(",")
    assert len(timeseries_header(1)) == 12 + 3


def test_empty_run_writes_header_only():
    from starflow.flow import run

    cfg = config_from_dict(dict(MINIMAL) | {"grid": [16, 32], "t_end": 0.0})
    grid = cfg.build_grid()
    res = run(np.ones(grid.shape), grid, cfg.flow_config())
    buf = io.StringIO()
    write_timeseries(res.records, buf, 2)
    assert buf.getvalue().strip() == ",".join(timeseries_header(2))


def test_sphere_rows_and_round_trip_floats(tmp_path):
    from dataclasses import replace

    from starflow.flow import run

    cfg = config_from_dict(dict(MINIMAL) | {"grid": [16, 32], "t_end": 0.1, "cadence": 0.02})
    grid = cfg.build_grid()
    res = run(np.ones(grid.shape), grid, replace(cfg.flow_config(), stop_at_convergence=False))
    path = tmp_path / "ts.csv"
    write_timeseries(res.records, path, 2)
    header, data = read_timeseries(path)
    assert data.shape == (6, 16)
    W = data[:, 12:]
    assert np.ptp(W, axis=0).max() <= 1e-12
    # shortest repr parses back to the identical double
    assert data[-1, 0] == res.records[-1].t
    assert all(data[i, 12 + j] == res.records[i].W[j] for i in range(6) for j in range(4))


def test_obj_export_sphere(tmp_path):
    g = build_grid(2, (8, 16))
    geo = shape_from_radial(np.full(g.shape, 1.7), g)
    path = tmp_path / "s.obj"
    export_mesh(geo, path)
    lines = path.read_text().splitlines()
    v = np.array([[float(x) for x in ln.split()[1:]] for ln in lines if ln.startswith("v ")])
    f = np.array([[int(x) for x in ln.split()[1:]] for ln in lines if ln.startswith("f ")])
    assert len(v) == 128 + 2
    assert np.allclose(np.linalg.norm(v, axis=1), 1.7)
    assert f.min() == 1 and f.max() == 130
    # closed surface: V - E + F = 2 and every triangle faces outward
    edges = {tuple(sorted(e)) for tri in f for e in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))}
    assert len(v) - len(edges) + len(f) == 2
    p = v[f - 1]
    normal = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    assert np.all(np.sum(normal * p.mean(axis=1), axis=1) > 0)


def test_polyline_export(tmp_path):
    g = build_grid(1, 8)
    geo = shape_from_radial(1.0 / np.sqrt(np.cos(g.theta) ** 2 / 4 + np.sin(g.theta) ** 2), g)
    path = tmp_path / "e.csv"
    export_mesh(geo, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["x", "y"] and len(rows) == 9
    assert float(rows[1][0]) == pytest.approx(2.0)


def test_export_refuses_non_finite(tmp_path):
    g = build_grid(2, (8, 16))
    geo = shape_from_radial(np.ones(g.shape), g)
    geo.x_amb[2, 3, 0] = np.nan
    path = tmp_path / "bad.obj"
    with pytest.raises(MeshExportError) as exc:
        export_mesh(geo, path)
    assert exc.value.node == (2, 3)
    assert not path.exists()


# --- command line ---------------------------------------------------------


def _write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if isinstance(doc, dict) else doc)
    return str(p)


def test_cli_simulate_and_reproducibility(tmp_path, capsys):
    doc = dict(MINIMAL) | {"grid": [16, 32], "shape": {"ellipsoid": [1.2, 1.0, 0.9]}, "t_end": 0.1,
                           "cadence": 0.02, "checks": {"variational": True}}
    cfg = _write(tmp_path, "c.json", doc)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "timeseries.csv").read_bytes()
    assert a == (tmp_path / "b" / "timeseries.csv").read_bytes()
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["config"]["t_end"] == 0.1 and man["admissibility"]["admissible"]
    assert "version" in man and (tmp_path / "a" / "final.obj").exists()


def test_cli_manifest_echoes_default_t_end(tmp_path):
    doc = {k: v for k, v in MINIMAL.items() if k != "t_end"} | {"grid": [8, 16], "osc_tol": 1e-3}
    cfg = _write(tmp_path, "c.json", doc)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["config"]["t_end"] == 10.0


def test_cli_exit_codes(tmp_path, capsys):
    bad_mode = _write(tmp_path, "b.json", dict(MINIMAL) | {"mode": "banana"})
    assert main(["simulate", "--config", bad_mode]) == 2
    assert "allowed modes" in capsys.readouterr().err
    assert main(["simulate", "--config", _write(tmp_path, "s.json", "{\n,")]) == 2
    dumbbell = {"dim": 1, "grid": 128, "shape": {"fourier": {"a": [0.0, 0.45]}}, "mode": "inverse",
                "f": {"family": "quotient", "k": 1}}
    path = _write(tmp_path, "d.json", dumbbell)
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "d")]) == 3
    assert main(["check-af", "--config", path, "--k", "1"]) == 3
    underflow = dict(MINIMAL) | {"grid": [16, 32], "shape": {"ellipsoid": [1.2, 1.0, 0.9]},
                                 "dt_initial": 50.0, "dt_min": 10.0, "t_end": 100.0, "cadence": 100.0}
    assert main(["simulate", "--config", _write(tmp_path, "u.json", underflow), "--out", str(tmp_path / "u")]) == 4


def test_cli_checks(tmp_path, capsys):
    ell = {"dim": 1, "grid": 256, "shape": {"ellipsoid": [1.5, 1.0]}, "mode": "inverse",
           "f": {"family": "quotient", "k": 1}}
    path = _write(tmp_path, "e.json", ell)
    assert main(["check-steiner", "--config", path, "--eps", "0.05", "--samples", "200000"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"]
    assert main(["check-af", "--config", path, "--k", "0"]) == 0
    assert main(["check-identities", "--dim", "1", "--samples", "200"]) == 0
    out = tmp_path / "m.csv"
    assert main(["export-mesh", "--config", path, "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 257
