"""
Kinematic chains: forward kinematics, Jacobians, manipulability
===============================================================

Loads the bundled chain descriptions, evaluates tool poses, checks a
Jacobian column against its geometric meaning, and sweeps the planar
2-link arm through a fold to watch the manipulability index collapse
at the straight-arm singularity.
"""

import numpy as np

from xrteleop import (
    POSITION_XY_ROWS,
    forward_kinematics,
    jacobian,
    manipulability,
)
from xrteleop.resources import load_chain, resource_names

# ---------------------------------------------------------------------------
# The package ships a handful of chains: a planar 2-link arm, a 6-dof arm,
# single- and two-finger hands. Each is a serial/tree arrangement of
# revolute and prismatic joints with position limits.
# ---------------------------------------------------------------------------
print("bundled chains:", ", ".join(n for n in resource_names() if n.endswith(".xml")))

arm = load_chain("arm6.xml")
print(f"\n{arm.name}: {arm.dof} dof, links {', '.join(arm.links)}")

# Tool pose at the zero configuration: arm stretched straight out.
zero = arm.zero_configuration()
pose = forward_kinematics(arm, zero, "tool")
print("tool at q=0:", np.round(pose.position, 4))

# Bend the elbow and shoulder: the tool comes in and down.
bent = np.array([0.2, 0.4, 0.8, -0.3, 0.1, 0.2])
pose = forward_kinematics(arm, bent, "tool")
print("tool at bent q:", np.round(pose.position, 4))

# ---------------------------------------------------------------------------
# A Jacobian column is the tool velocity produced by unit velocity on one
# joint. For a revolute joint that is axis x (tool - origin): verify it.
# ---------------------------------------------------------------------------
J = jacobian(arm, bent, "tool")
base_joint = arm.joints[0]
axis = np.array(base_joint.axis, dtype=float)
expected = np.cross(axis, pose.position)  # joint 0 sits at the origin
print("\nJacobian column 0 (linear):", np.round(J.matrix[:3, 0], 6))
print("axis x lever arm:          ", np.round(expected, 6))

# ---------------------------------------------------------------------------
# Manipulability sqrt(det(J J^T)) measures distance from singularity.
# For the planar arm it is |l1 l2 sin(elbow)|: maximal at a right angle,
# zero when the arm folds or stretches flat.
# ---------------------------------------------------------------------------
planar = load_chain("planar2.xml")
print(f"\n{planar.name}: elbow sweep")
for elbow in np.linspace(0.0, np.pi, 7):
    q = np.array([0.3, elbow])
    m = manipulability(jacobian(planar, q, "tip"), POSITION_XY_ROWS)
    bar = "#" * int(40 * m)
    print(f"  elbow {elbow:5.2f} rad  m = {m:.4f}  {bar}")
