"""Smoke tests for the python extension module."""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.environ.get("LATMPC_PYTHON_DIR", "."))

latmpc = pytest.importorskip("latmpc")

PRESETS = os.environ.get("LATMPC_PRESETS", str(latmpc.preset_dir()))


def test_slip_angle():
    assert latmpc.slip_angle(1, 0.15, 0.0, 0.0, 22.22, l_f=1.18, l_r=1.77) == pytest.approx(0.15)
    got = latmpc.slip_angle(3, 0.0, 1.0, 0.1, 20.0, l_f=1.18, l_r=1.77)
    assert got == pytest.approx(-(1.0 - 0.177) / 20.0)


def test_dugoff_odd_and_bounded():
    tire = latmpc.dugoff_tire(c_alpha=47275.0, c_sigma=80000.0)
    for alpha in (0.01, 0.1, 0.5):
        fy = latmpc.lateral_force(alpha, 4000.0, tire)
        assert fy == pytest.approx(-latmpc.lateral_force(-alpha, 4000.0, tire))
        assert abs(fy) <= 4000.0 + 1e-9


def test_linearization_slope():
    tire = latmpc.dugoff_tire(c_alpha=47275.0, c_sigma=80000.0)
    f_y, c_alpha, alpha = latmpc.linearize_tire(0.0, 5000.0, tire)
    assert f_y == 0.0
    assert c_alpha == pytest.approx(47275.0)
    assert alpha == 0.0


def test_desired_yaw_rate_cap():
    r = latmpc.desired_yaw_rate(1.0, 50.0, 2.95, 0.0, 1.0)
    assert r == pytest.approx(9.81 / 50.0)
    assert latmpc.desired_yaw_rate(0.0, 20.0, 2.95, 0.4, 1.0) == 0.0


def test_effective_radius():
    assert latmpc.effective_radius(0.270202127561534, 0.30) == pytest.approx(0.29, abs=1e-6)


def test_solve_qp():
    p = np.diag([2.0, 4.0])
    q = np.array([-2.0, 0.0])
    a = np.eye(2)
    l = np.array([-1.0, 0.25])
    u = np.array([0.5, 2.0])
    out = latmpc.solve_qp(p, q, a, l, u)
    assert out["status"] == "solved"
    assert out["z"][0] == pytest.approx(0.5, abs=1e-6)
    assert out["z"][1] == pytest.approx(0.25, abs=1e-6)


def test_run_scenario_short():
    out = latmpc.run_scenario(
        os.path.join(PRESETS, "general_ev.ini"),
        os.path.join(PRESETS, "general_ev_step_steer.ini"),
        overrides=["scenario.steps=4"],
    )
    assert out["states"].shape == (4, 8)
    assert all(s == "solved" for s in out["status"])
    assert out["metrics"]["solver_failures"] == 0
