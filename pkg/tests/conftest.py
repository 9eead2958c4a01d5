import math

import pytest
from hypothesis import HealthCheck, settings

from lossyspdc import PhysicalParams, build_grid, evolve, make_plan, suggest_window

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Lines collected by tests/test_acceptance.py, echoed after the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


# Lossless setup of the CF contour figure: L_OV = L_NL/10, L_D = 3 L_NL, L = L_NL.
FIG2 = PhysicalParams(l_ov=0.1, l_d=3.0, l_total=1.0)
FIG2_N = 256
FIG2_SNAPSHOTS = (0.05, 1.0 / 3.0, 1.0)

# Same with L_A = L_NL/5, run to 1.5 L_NL (stationary-CF figure, mode figure, stage figure).
FIG3 = PhysicalParams(l_ov=0.1, l_d=3.0, l_a=0.2, l_total=1.5)
FIG3_SNAPSHOTS = (0.6, 0.8, 1.0, 1.2, 1.5)


@pytest.fixture(scope="session")
def fig2_run():
    grid = build_grid(FIG2_N, suggest_window(FIG2))
    plan = make_plan(FIG2.l_total, 5e-4, snapshot_zs=FIG2_SNAPSHOTS, trace_every=20)
    return FIG2, grid, evolve(FIG2, grid, plan)


@pytest.fixture(scope="session")
def fig3_run():
    grid = build_grid(256, suggest_window(FIG3))
    plan = make_plan(FIG3.l_total, 5e-4, snapshot_zs=FIG3_SNAPSHOTS, trace_every=10)
    return FIG3, grid, evolve(FIG3, grid, plan)


def snapshot_at(result, z):
    for s in result.snapshots:
        if math.isclose(s.z, z, rel_tol=1e-9, abs_tol=1e-12):
            return s
    raise KeyError(z)
