"""
Hand retargeting: fingertips to joint angles, smoothed
======================================================

Feeds a noisy two-finger curl gesture through the keypoint retargeting
solver at several temporal-smoothing weights. With no smoothing the
joints chatter with the sensor noise; raising the weight trades a little
lag for a much shorter joint-space path. Tracking dropouts freeze the
hand instead of snapping it to zero.
"""

import numpy as np

from xrteleop import HandFrame, RetargetMap, RetargetPair, RetargetParams, Pose, step_stream
from xrteleop.retargeting import HAND_JOINT_COUNT, INDEX_TIP, THUMB_TIP, HandJoint
from xrteleop.resources import load_chain

hand = load_chain("hand_two_finger.xml")
PAIRS = RetargetMap(
    (
        RetargetPair(THUMB_TIP, "f1_tip"),
        RetargetPair(INDEX_TIP, "f2_tip"),
    )
)

rng = np.random.default_rng(3)


def frame_from(keypoints: dict) -> HandFrame:
    """Active 26-joint frame; unmapped keypoints sit at the wrist."""
    joints = tuple(
        HandJoint(Pose(keypoints.get(i, np.zeros(3)))) for i in range(HAND_JOINT_COUNT)
    )
    return HandFrame(is_active=True, joints=joints)


MIRROR = np.array([1.0, -1.0, 1.0])  # the two fingers oppose across the x axis


def curl_frames(count: int, noise: float) -> list[HandFrame]:
    """Two opposed fingertips sweeping from closed to spread, with sensor noise."""
    frames = []
    for k in range(count):
        closure = 0.5 * (1 - np.cos(np.pi * k / (count - 1)))  # 0 -> 1, eased
        angle = 1.3 * closure
        tip = np.array([0.05, 0.02, 0.0]) + 0.05 * np.array(
            [np.cos(angle) - 1.0, np.sin(angle), 0.0]
        ) + 0.04 * np.array([np.cos(2 * angle) - 1.0, np.sin(2 * angle), 0.0])
        frames.append(
            frame_from(
                {
                    THUMB_TIP: tip + rng.normal(0, noise, 3),
                    INDEX_TIP: tip * MIRROR + rng.normal(0, noise, 3),
                }
            )
        )
    return frames


frames = curl_frames(120, noise=0.002)  # 2 mm keypoint noise

print("smoothing weight  ->  joint-space path length [rad]")
for beta in (0.0, 0.01, 0.1, 1.0):
    outputs = np.stack(step_stream(frames, hand, PAIRS, RetargetParams(beta=beta)))
    path = float(np.sum(np.linalg.norm(np.diff(outputs, axis=0), axis=1)))
    print(f"  beta = {beta:<5}     {path:7.3f}  {'#' * int(2 * path)}")

# ---------------------------------------------------------------------------
# Tracking loss: three frames go inactive mid-gesture. The stream holds the
# last solution rather than jumping -- watch the output stay constant.
# ---------------------------------------------------------------------------
frames = curl_frames(12, noise=0.0)
for k in (5, 6, 7):
    frames[k] = HandFrame(is_active=False)
outputs = step_stream(frames, hand, PAIRS, RetargetParams(beta=0.01))
print("\ndropout handling (frames 5-7 inactive):")
for k, q in enumerate(outputs):
    flag = "  <- held" if k in (5, 6, 7) else ""
    print(f"  frame {k:2d}: q = {np.round(q, 4)}{flag}")
