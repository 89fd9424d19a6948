"""
Differential inverse kinematics: tracking a circle
==================================================

Drives the 6-dof arm's tool around a vertical circle with the
box-constrained differential IK solver, then repeats the run with the
wrist velocity limit cut to a tenth to show the clamping at work: the
solver saturates the slow joint and the tracking error grows, but the
limit is never violated.
"""

import numpy as np

from xrteleop import (
    ConstraintSet,
    IkParams,
    POSITION_ROWS,
    Pose,
    Task,
    forward_kinematics,
    integrate,
    jacobian,
    solve_dik,
)
from xrteleop.resources import load_chain

RATE_HZ = 90.0
DT = 1.0 / RATE_HZ

arm = load_chain("arm6.xml")
home = np.array([0.2, 0.4, 0.8, -0.3, 0.1, 0.2])
center = forward_kinematics(arm, home, "tool").position

# One full circle, radius 6 cm, in 4 seconds.
def circle_waypoint(k: int) -> np.ndarray:
    phase = 2.0 * np.pi * k / (4.0 * RATE_HZ)
    return center + 0.06 * np.array([0.0, np.cos(phase) - 1.0, np.sin(phase)])


def track(constraints: ConstraintSet) -> tuple[float, np.ndarray]:
    """Run the circle; return worst tracking error and peak |qdot| per joint."""
    params = IkParams(damping=1e-4, dt=DT, max_task_speed=1.0)
    q = home.copy()
    worst = 0.0
    peak = np.zeros(arm.dof)
    for k in range(int(4.0 * RATE_HZ) + 1):
        target = Pose(circle_waypoint(k))
        sol = solve_dik(arm, q, [Task("tool", target, rows=POSITION_ROWS)], constraints, params)
        peak = np.maximum(peak, np.abs(sol.qdot))
        q, _ = integrate(arm, q, sol.qdot, DT)
        reached = forward_kinematics(arm, q, "tool").position
        worst = max(worst, float(np.linalg.norm(reached - target.position)))
    return worst, peak


# ---------------------------------------------------------------------------
# Unhindered run: every joint may move at its declared velocity limit.
# ---------------------------------------------------------------------------
free = ConstraintSet.from_chain(arm)
worst, peak = track(free)
print(f"full velocity limits: worst tracking error {worst * 1e3:.3f} mm")
print("  peak |qdot| [rad/s]:", np.round(peak, 3))

# ---------------------------------------------------------------------------
# Now strangle the elbow joint to 0.05 rad/s. The solver must route the
# motion through the remaining joints; where it cannot, error grows --
# but the commanded elbow rate never exceeds the box.
# ---------------------------------------------------------------------------
vmax = arm.velocity_limits().copy()
vmax[2] = 0.05
slow = ConstraintSet(arm.position_limits(), vmax)
worst_slow, peak_slow = track(slow)
print(f"\nelbow limited to 0.05 rad/s: worst tracking error {worst_slow * 1e3:.3f} mm")
print("  peak |qdot| [rad/s]:", np.round(peak_slow, 3))
print(f"  elbow peak {peak_slow[2]:.4f} <= 0.05: {peak_slow[2] <= 0.05 + 1e-12}")
