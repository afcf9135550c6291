import numpy as np
import pytest

from starflow.curvfun import CurvatureFunctionSpec
from starflow.flow import FlowConfig, run
from starflow.sphere_grid import build_grid

ELLIPSOID_AXES = (1.5, 1.0, 0.8)


def ellipsoid_rho(grid, axes=ELLIPSOID_AXES):
    """Radial function of an origin-centred ellipsoid, written out independently of the shapes module."""
    y = grid.unit_vectors()
    return 1.0 / np.sqrt(np.sum(y**2 / np.asarray(axes) ** 2, axis=-1))


def ellipse_rho(theta, a, b):
    return a * b / np.sqrt(b**2 * np.cos(theta) ** 2 + a**2 * np.sin(theta) ** 2)


@pytest.fixture(scope="session")
def ellipsoid_run():
    """Constrained k=1 flow from the (1.5, 1.0, 0.8) ellipsoid on 48x96, sampled every 0.01."""
    grid = build_grid(2, (48, 96))
    cfg = FlowConfig("constrained", CurvatureFunctionSpec("quotient", 1, 2), t_end=20.0, osc_tol=1e-4, cadence=1e-2)
    return run(ellipsoid_rho(grid), grid, cfg)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[num])
