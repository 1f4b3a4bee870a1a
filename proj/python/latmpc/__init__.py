"""Lateral-stability MPC toolkit.

The compiled extension carries the implementation; this package re-exports
its surface and locates the bundled preset files.
"""

from pathlib import Path

from ._core import (  # noqa: F401
    TireParams,
    checkpoint_steering,
    desired_state_general,
    desired_state_vhs,
    desired_yaw_rate,
    dugoff_tire,
    effective_radius,
    lateral_force,
    linearize_tire,
    pacejka_tire,
    peak_longitudinal_force,
    run_scenario,
    slip_angle,
    solve_qp,
)


def preset_dir() -> Path:
    """Directory with the bundled vehicle and scenario preset files."""
    bundled = Path(__file__).parent / "presets"
    if bundled.is_dir():
        return bundled
    # development layouts keep presets/ at the repository root
    for parent in Path(__file__).resolve().parents:
        candidate = parent / "presets"
        if candidate.is_dir():
            return candidate
    return bundled
