"""Release gate: one test per headline guarantee, at full stated scale.

Each test here re-verifies one user-facing claim end to end — larger sample
sizes and longer windows than the per-module suites, tolerances stated
inline. Run with -v to get the one-line pass/fail verdict per guarantee;
each test also prints its measured numbers.

The wire-latency study deserves a note: published end-to-end teleoperation
latencies (~80-120 ms) come from hardware video pipelines and cannot be
reproduced on a single machine. What is verified here instead is (a) the
measurement instrument itself against synthetic streams with known injected
delay, and (b) documented loopback numbers for this transport.
"""

import json
import math
import time
from pathlib import Path

import numpy as np

from oracles import (
    dls_solution,
    fd_jacobian,
    grid_minimize,
    grid_minimize_qp,
    planar2_manipulability,
    qp_objective,
    random_chain,
    random_configuration,
)
from packets import random_packet
from test_retargeting import INDEX_ONLY, analytic_objective, finger2_tip, make_hand, wiggle_frames

from xrteleop import protocol, quat, resources, scripted, simrobot, teleop
from xrteleop.errors import ProtocolError
from xrteleop.ik import ConstraintSet, IkParams, Task, assemble_dik_qp, integrate, solve_dik
from xrteleop.kinematics import (
    POSITION_ROWS,
    POSITION_XY_ROWS,
    forward_kinematics,
    jacobian,
    manipulability,
)
from xrteleop.pose import Pose
from xrteleop.protocol import (
    ControllerState,
    HeadState,
    SidePair,
    TrackingPacket,
    get_convention,
)
from xrteleop.retargeting import INDEX_TIP, RetargetParams, RetargetState, solve_retarget, step_stream
from xrteleop.streaming import (
    LatencySample,
    Publisher,
    StreamConfig,
    Subscriber,
    load_session,
    measure_latency,
    record_episode,
    save_session,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
GOLDEN_FULL = FIXTURES / "golden" / "packet_full.json"

ARM_CONFIG = teleop.load_config(resources.resource_path("right_arm.yaml"))
ARM_CHAIN = ARM_CONFIG.arms["right"].chain
ARM_HOME = ARM_CONFIG.arms["right"].home


# --- packet codec ------------------------------------------------------------------


def test_packet_codec_survives_round_trips_and_fuzzing():
    """10^4 canonical round-trips, full wire-field coverage, 10^6 fuzz inputs."""
    started = time.monotonic()
    rng = np.random.default_rng(2024)

    # round-trip: canonical bytes are a fixed point of decode . encode
    for sequence in range(10_000):
        data = protocol.encode_packet(random_packet(rng, sequence=sequence))
        assert protocol.encode_packet(protocol.decode_packet(data)) == data

    # wire layout: every documented tracking field appears in the full packet
    obj = json.loads(GOLDEN_FULL.read_text())
    assert {"pose", "status", "handMode"} <= set(obj["head"])
    for side in ("left", "right"):
        assert {
            "pose", "axisX", "axisY", "axisClick", "grip", "trigger",
            "primaryButton", "secondaryButton", "menuButton",
        } <= set(obj["controllers"][side])
        assert {"isActive", "scale", "HandJointLocations"} <= set(obj["hands"][side])
    assert "joints" in obj["body"]
    assert {"p", "va", "wva", "sn"} <= set(obj["trackers"][0])

    # fuzz: a million arbitrary inputs either decode or raise the structured
    # error family -- never anything else, never a hang
    blob = rng.integers(0, 256, size=1 << 20, dtype=np.uint8).tobytes()
    printable = bytes(rng.integers(32, 127, size=1 << 20, dtype=np.uint8))
    golden = GOLDEN_FULL.read_bytes()
    rejected = 0
    for k in range(1_000_000):
        mode = k % 16
        if mode < 7:
            start = (k * 2654435761) % (len(blob) - 1200)
            data = blob[start : start + (k % 1200)]
        elif mode < 14:
            start = (k * 40503) % (len(printable) - 1200)
            data = printable[start : start + (k % 1200)]
        else:  # bit-flipped valid packet
            corrupt = bytearray(golden)
            corrupt[(k * 31) % len(corrupt)] ^= 1 << (k % 8)
            data = bytes(corrupt)
        try:
            protocol.decode_packet(data)
        except ProtocolError:
            rejected += 1
    elapsed = time.monotonic() - started
    assert elapsed < 120.0, f"conformance run took {elapsed:.0f}s, budget is 120s"
    print(f"\n  codec: 10^4 round-trips clean, 10^6 fuzz inputs "
          f"({rejected} structured rejections) in {elapsed:.1f}s")


# --- kinematics ---------------------------------------------------------------------


def test_jacobians_match_finite_differences_on_random_chains():
    """20 random mixed chains (dof <= 6): every entry within 1e-5 of central FD."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        chain = random_chain(rng, max_dof=6)
        tip = chain.joints[-1].child_link
        q = random_configuration(rng, chain)
        J = jacobian(chain, q, tip).matrix
        J_fd = fd_jacobian(chain, q, tip)
        worst = max(worst, float(np.max(np.abs(J - J_fd))))
    assert worst < 1e-5
    print(f"\n  jacobian vs finite differences, 20 random chains: worst entry {worst:.2e}")


# --- differential IK ------------------------------------------------------------------


def test_ik_matches_grid_search_and_damped_least_squares(planar2, finger2, spatial3):
    """Box-constrained: objective gap to exhaustive grid <= 1e-4 (dof <= 3).
    Unconstrained: matches closed-form damped least squares within 1e-8."""
    rng = np.random.default_rng(40)
    params = IkParams(damping=1e-4, dt=1.0 / 90.0, max_task_speed=10.0)

    worst_gap = 0.0
    for chain, frame in ((planar2, "tip"), (finger2, "fingertip"), (spatial3, "tip")):
        lo, hi = chain.position_limits()
        for _ in range(4):
            q = rng.uniform(np.maximum(lo, -1.0), np.minimum(hi, 1.0))
            cur = forward_kinematics(chain, q, frame)
            target = Pose(cur.position + rng.uniform(-0.02, 0.02, 3), cur.orientation)
            constraints = ConstraintSet((lo, hi), np.full(chain.dof, 2.0), limit_horizon=0.5)
            task = Task(frame, target, rows=POSITION_ROWS)
            sol = solve_dik(chain, q, [task], constraints, params)
            qp = assemble_dik_qp(chain, q, [task], constraints, params)
            _, grid_val = grid_minimize_qp(qp.H, qp.c, qp.lower, qp.upper)
            gap = qp_objective(qp.H, qp.c, sol.qdot) - grid_val
            worst_gap = max(worst_gap, gap)
            assert gap <= 1e-4
    assert worst_gap <= 1e-4  # solver never loses to the grid by more than pitch error

    worst_dls = 0.0
    for _ in range(20):
        chain = random_chain(rng, max_dof=4)
        tip = chain.joints[-1].child_link
        q = random_configuration(rng, chain) * 0.5
        cur = forward_kinematics(chain, q, tip)
        target = Pose(cur.position + rng.uniform(-0.01, 0.01, 3), cur.orientation)
        wide = ConstraintSet(
            (np.full(chain.dof, -1e9), np.full(chain.dof, 1e9)), np.full(chain.dof, 1e9)
        )
        task = Task(tip, target, rows=POSITION_ROWS, kind="frame_position")
        sol = solve_dik(chain, q, [task], wide, params)
        J = jacobian(chain, q, tip).rows(POSITION_ROWS)
        residual = -(target.position - cur.position) / params.dt
        ref = dls_solution([J], [residual], [1.0], params.damping)
        worst_dls = max(worst_dls, float(np.max(np.abs(sol.qdot - ref))))
    assert worst_dls < 1e-8
    print(f"\n  ik: grid gap <= {worst_gap:.2e} (tol 1e-4), "
          f"dls deviation {worst_dls:.2e} (tol 1e-8)")


# --- manipulability --------------------------------------------------------------------


def test_manipulability_matches_analytic_oracle_and_regularizer_helps(planar2):
    """Planar 2-link: m = |l1 l2 sin q2| within 1e-9 at 100 random configurations;
    regularized singularity crossing keeps m higher without faster joints."""
    rng = np.random.default_rng(50)
    worst = 0.0
    for _ in range(100):
        q = rng.uniform(-np.pi, np.pi, 2)
        m = manipulability(jacobian(planar2, q, "tip"), POSITION_XY_ROWS)
        worst = max(worst, abs(m - planar2_manipulability(q)))
    assert worst < 1e-9

    def crossing_run(weight):
        params = IkParams(
            damping=1e-3, manipulability_weight=weight, dt=1.0 / 90.0,
            max_task_speed=0.3, manipulability_rows=POSITION_XY_ROWS,
        )
        constraints = ConstraintSet.from_chain(planar2)
        q = np.array([0.4, 1.6])
        start = forward_kinematics(planar2, q, "tip").position
        goal = 2.3 * start / np.linalg.norm(start)  # beyond the 2.0 m reach
        max_rate = 0.0
        for k in range(1, 301):
            waypoint = start + (goal - start) * (k / 300)
            sol = solve_dik(
                planar2, q, [Task("tip", Pose(waypoint), rows=POSITION_XY_ROWS)],
                constraints, params,
            )
            max_rate = max(max_rate, float(np.linalg.norm(sol.qdot)))
            q, _ = integrate(planar2, q, sol.qdot, params.dt)
        return manipulability(jacobian(planar2, q, "tip"), POSITION_XY_ROWS), max_rate

    m_plain, rate_plain = crossing_run(0.0)
    m_reg, rate_reg = crossing_run(0.05)
    assert m_reg >= m_plain
    assert rate_reg <= rate_plain + 1e-9
    print(f"\n  manipulability: analytic deviation {worst:.2e} (tol 1e-9); "
          f"singularity crossing m {m_plain:.4f} -> {m_reg:.4f} regularized, "
          f"max rate {rate_plain:.3f} -> {rate_reg:.3f} rad/s")


# --- hand retargeting --------------------------------------------------------------------


def test_retargeting_matches_grid_stays_bounded_and_smooths_monotonically(finger2):
    """2-dof solutions match a 0.01-rad exhaustive grid; smoothing weight is
    monotone in path length at {0, 0.01, 0.1, 1}; 10^4 random frames never
    leave the joint box."""
    rng = np.random.default_rng(60)
    lo, hi = finger2.position_limits()

    worst_gap = 0.0
    for _ in range(5):
        q_true = rng.uniform(lo, hi)
        target = finger2_tip(q_true)
        frame = make_hand({INDEX_TIP: target})
        state = RetargetState.from_chain(finger2)
        q = solve_retarget(finger2, frame, INDEX_ONLY, state, RetargetParams(beta=0.0))
        objective = analytic_objective(target, state.q_prev, 0.0, finger2_tip)
        _, grid_best = grid_minimize(objective, lo, hi, pitch=0.01)
        worst_gap = max(worst_gap, objective(q) - grid_best)
        assert objective(q) <= grid_best + 1e-6

    frames = wiggle_frames(np.random.default_rng(61), 40)
    variations = []
    for beta in (0.0, 0.01, 0.1, 1.0):
        outputs = np.stack(step_stream(frames, finger2, INDEX_ONLY, RetargetParams(beta=beta)))
        variations.append(float(np.sum(np.linalg.norm(np.diff(outputs, axis=0), axis=1))))
    for tighter, looser in zip(variations[1:], variations):
        assert tighter <= looser + 1e-12

    state = RetargetState.from_chain(finger2)
    params = RetargetParams(beta=0.01)
    for k in range(10_000):
        target = rng.uniform(-0.15, 0.15, size=3) * np.array([1.0, 1.0, 0.0])
        frame = make_hand({INDEX_TIP: target})
        q = solve_retarget(finger2, frame, INDEX_ONLY, state, params)
        assert np.all(q >= lo) and np.all(q <= hi)
        state = state.advanced(q)
    print(f"\n  retargeting: grid gap <= {worst_gap:.2e}, "
          f"path length by smoothing weight {['%.3f' % v for v in variations]}, "
          f"10^4 random frames inside bounds")


# --- closed-loop tracking -------------------------------------------------------------------


def test_closed_loop_settles_below_a_millimeter_with_exact_clutch_engage():
    """Scripted 6-dof glide: steady-state error < 1 mm and < 0.5 degrees;
    the clutch-engage tick commands exactly zero joint velocity."""
    rotation = get_convention(ARM_CONFIG.convention).matrix
    anchor = forward_kinematics(ARM_CHAIN, ARM_HOME, "tool")

    session = scripted.smooth_line_session(distance=0.05)
    result = simrobot.run_session(session.packets, ARM_CONFIG, rate_hz=session.rate_hz)
    mark = session.mark("settled")
    ee = forward_kinematics(
        ARM_CHAIN, result.states[mark.index].configurations[ARM_CHAIN.name], "tool"
    )
    target = anchor.position + rotation @ np.array(mark.position)
    position_error = float(np.linalg.norm(ee.position - target))
    relative = quat.multiply(quat.conjugate(ee.orientation), anchor.orientation)
    orientation_error = math.degrees(float(np.linalg.norm(quat.to_rotvec(relative))))
    assert position_error < 1e-3
    assert orientation_error < 0.5

    # engage tick: grip crosses the press threshold at the current pose
    state = teleop.initial_state(ARM_CONFIG).with_configuration(ARM_CHAIN.name, ARM_HOME)
    packet = TrackingPacket(
        timestamp=0, sequence=0, head=HeadState(),
        controllers=SidePair(
            right=ControllerState(pose=(0.3, 0.1, -0.2, 0.0, 0.0, 0.0, 1.0),
                                  grip=1.0, side="right")
        ),
    )
    commands, _ = teleop.step(packet, state, ARM_CONFIG)
    arm_commands = [c for c in commands if isinstance(c, teleop.ArmVelocity)]
    assert len(arm_commands) == 1
    assert np.all(arm_commands[0].qdot == 0.0)  # exact, not approximate
    print(f"\n  closed loop: settled at {position_error * 1e3:.4f} mm, "
          f"{orientation_error:.4f} deg; clutch engage qdot identically zero")


# --- streaming ---------------------------------------------------------------------------


def test_streaming_holds_rate_recorder_cadence_and_latency_instrument_accuracy():
    """Loopback publisher sustains 90 Hz +/- 5% over 10 s; the recorder yields
    100 +/- 1 frames for 2 s at 50 Hz; the latency instrument reproduces a
    synthetic constant delay within 1 ms. Loopback latency is printed for the
    record -- hardware video-pipeline latencies are out of reach on one host."""
    received = []

    def packet_source():
        head = HeadState()
        while True:
            yield TrackingPacket(timestamp=0, sequence=0, head=head)

    publisher = Publisher(packet_source(), StreamConfig(port=0, rate_hz=90.0))
    subscriber = Subscriber(publisher.address, on_packet=received.append)
    time.sleep(0.5)  # warm-up
    before = len(received)
    time.sleep(10.0)
    window = len(received) - before
    subscriber.stop()
    publisher.stop()
    assert 900 * 0.95 <= window <= 900 * 1.05, f"{window} frames in 10 s"

    period_ns = round(1e9 / 90.0)
    ticks = [k * period_ns for k in range(181)]  # exactly 2.0 s of 90 Hz states
    states = [(t, np.array([math.sin(t * 1e-9), math.cos(t * 1e-9)]), k)
              for k, t in enumerate(ticks)]
    commands = [(t, np.array([0.1, 0.2, 0.3])) for t in ticks]
    episode = record_episode(states, commands, rate_hz=50.0)
    assert abs(len(episode.frames) - 100) <= 1

    injected_ns = 10_000_000  # exactly 10 ms
    samples = [
        LatencySample(sent_ns=k * period_ns, received_ns=k * period_ns + injected_ns, sequence=k)
        for k in range(500)
    ]
    report = measure_latency(samples)
    assert abs(report.mean_ms - 10.0) < 1.0
    assert report.std_ms < 1e-9 and report.loss_fraction == 0.0

    loopback = []
    publisher = Publisher(packet_source(), StreamConfig(port=0, rate_hz=90.0))
    subscriber = Subscriber(
        publisher.address,
        on_packet=lambda p: loopback.append(
            LatencySample(p.timestamp, time.monotonic_ns(), p.sequence)
        ),
    )
    time.sleep(1.5)
    subscriber.stop()
    publisher.stop()
    wire = measure_latency(loopback)
    assert wire.mean_ms < 50.0  # sanity only; see docstring
    print(f"\n  streaming: {window} frames in 10 s ({window / 10.0:.1f} Hz), "
          f"recorder {len(episode.frames)} frames/2 s, synthetic delay "
          f"{report.mean_ms:.3f} ms; loopback mean {wire.mean_ms:.3f} ms "
          f"p99 {wire.p99_ms:.3f} ms loss {wire.loss_fraction:.3f}")


# --- determinism -------------------------------------------------------------------------


def test_full_loop_traces_are_byte_identical_across_runs(tmp_path):
    """Same recorded session + same seed => byte-identical state traces,
    both clean and under 50% seeded packet drop."""
    session = scripted.square_path_session(side=0.05, dwell_s=0.4)
    path = tmp_path / "golden_session.jsonl"
    save_session(session.packets, path, metadata={"scripted": "square"})
    _, packets = load_session(path)

    clean = [
        simrobot.run_session(packets, ARM_CONFIG, rate_hz=session.rate_hz).trace()
        for _ in range(2)
    ]
    assert clean[0] == clean[1]

    emulation = simrobot.NetworkEmulation(delay_ms=(2.0, 12.0), drop_probability=0.5, seed=17)
    lossy = [
        simrobot.run_session(
            packets, ARM_CONFIG, rate_hz=session.rate_hz, emulation=emulation
        ).trace()
        for _ in range(2)
    ]
    assert lossy[0] == lossy[1]
    assert lossy[0] != clean[0]  # the emulation actually changed the run
    print(f"\n  determinism: {len(clean[0])} trace bytes identical across runs "
          f"(clean and 50% drop)")
