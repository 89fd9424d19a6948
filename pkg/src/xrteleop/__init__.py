"""Hardware-free XR teleoperation kernel.

Kinematic chains, differential IK, hand retargeting, the tracking packet
protocol, latest-only streaming, teleop mappings, and a kinematic robot
simulator. Everything runs on plain numpy; no device SDKs are required.
"""

from .chain import (
    FIXED,
    PRISMATIC,
    REVOLUTE,
    JointSpec,
    KinematicChain,
    parse_chain,
    serialize_chain,
)
from .errors import XrTeleopError
from .ik import (
    ConstraintSet,
    IkParams,
    IkSolution,
    Task,
    integrate,
    solve_dik,
    solve_box_qp,
)
from .kinematics import (
    ALL_ROWS,
    ORIENTATION_ROWS,
    POSITION_ROWS,
    POSITION_XY_ROWS,
    Jacobian,
    forward_kinematics,
    jacobian,
    manipulability,
    manipulability_gradient,
)
from .pose import Pose
from .protocol import (
    BodyState,
    ControllerState,
    HandJointEntry,
    HandState,
    HeadState,
    MotionTrackerState,
    SidePair,
    TrackingPacket,
    decode_packet,
    encode_packet,
    get_convention,
    xr_to_robot,
)
from .retargeting import (
    HandFrame,
    RetargetMap,
    RetargetPair,
    RetargetParams,
    RetargetState,
    RetargetStream,
    solve_retarget,
    step_stream,
)
from .simrobot import (
    NetworkEmulation,
    SimState,
    TeleopService,
    initial_sim_state,
    run_session,
    sim_step,
)
from .streaming import (
    EpisodeRecord,
    LatencyReport,
    LatencySample,
    Publisher,
    StreamConfig,
    Subscriber,
    load_session,
    measure_latency,
    record_episode,
    save_episode,
    save_session,
)
from .teleop import (
    ArmMapping,
    HandMapping,
    TeleopConfig,
    TeleopState,
    initial_state,
    load_config,
)
from .timing import RateTicker, now_ns

__version__ = "0.1.0"

__all__ = [
    "ALL_ROWS",
    "ArmMapping",
    "BodyState",
    "ConstraintSet",
    "ControllerState",
    "EpisodeRecord",
    "FIXED",
    "HandFrame",
    "HandJointEntry",
    "HandMapping",
    "HandState",
    "HeadState",
    "IkParams",
    "IkSolution",
    "Jacobian",
    "JointSpec",
    "KinematicChain",
    "LatencyReport",
    "LatencySample",
    "MotionTrackerState",
    "NetworkEmulation",
    "ORIENTATION_ROWS",
    "POSITION_ROWS",
    "POSITION_XY_ROWS",
    "PRISMATIC",
    "Pose",
    "Publisher",
    "REVOLUTE",
    "RateTicker",
    "RetargetMap",
    "RetargetPair",
    "RetargetParams",
    "RetargetState",
    "RetargetStream",
    "SidePair",
    "SimState",
    "StreamConfig",
    "Subscriber",
    "Task",
    "TeleopConfig",
    "TeleopService",
    "TeleopState",
    "TrackingPacket",
    "XrTeleopError",
    "decode_packet",
    "encode_packet",
    "forward_kinematics",
    "get_convention",
    "initial_sim_state",
    "initial_state",
    "integrate",
    "jacobian",
    "load_config",
    "load_session",
    "manipulability",
    "manipulability_gradient",
    "measure_latency",
    "now_ns",
    "parse_chain",
    "record_episode",
    "run_session",
    "save_episode",
    "save_session",
    "serialize_chain",
    "sim_step",
    "solve_box_qp",
    "solve_dik",
    "solve_retarget",
    "step_stream",
    "xr_to_robot",
    "__version__",
]
