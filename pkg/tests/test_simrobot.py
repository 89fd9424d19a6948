"""Simulated-plant and closed-loop session tests.

The scripted sessions carry their own ground truth (commanded device path +
settle marks), so the loop assertions here are the end-to-end ones: corners
within tolerance, steady-state convergence, seeded determinism down to the
byte, and bounded degradation under packet loss.
"""

import json
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from xrteleop import quat, resources, scripted, simrobot, teleop
from xrteleop.errors import DimensionMismatch, EmptyStream
from xrteleop.kinematics import forward_kinematics
from xrteleop.protocol import (
    ControllerState,
    HeadState,
    SidePair,
    TrackingPacket,
    decode_packet,
    encode_packet,
    get_convention,
)
from xrteleop.simrobot import NetworkEmulation, SimState

# mid-workspace elbow-bent start; the scripted motions stay well inside reach
Q_START = np.array([0.2, 0.4, 0.8, -0.3, 0.1, 0.2])


def arm_config():
    chain = resources.load_chain("arm6")
    return teleop.TeleopConfig(arms={"right": teleop.ArmMapping(chain=chain, ee_frame="tool")})


def start_state(cfg, t_ns=0):
    chains = simrobot.config_chains(cfg)
    sim = simrobot.initial_sim_state(chains, t_ns=t_ns)
    return replace(sim, configurations={**sim.configurations, "arm6": Q_START})


def controller_packet(sequence, position=(0.0, 0.0, 0.0), grip=0.0):
    return TrackingPacket(
        timestamp=sequence * 11_111_111,
        sequence=sequence,
        head=HeadState(),
        controllers=SidePair(
            right=ControllerState(pose=tuple(position) + (0.0, 0.0, 0.0, 1.0), grip=grip, side="right")
        ),
    )


def tool_pose(state):
    chain = resources.load_chain("arm6")
    return forward_kinematics(chain, state.configurations["arm6"], "tool")


def orientation_error_deg(a, b):
    d = quat.multiply(quat.conjugate(a), b)
    return math.degrees(np.linalg.norm(quat.to_rotvec(d)))


# --- angle wrapping -------------------------------------------------------------


class TestWrapAngle:
    def test_pi_stays_pi(self):
        assert simrobot.wrap_angle(math.pi) == math.pi

    def test_minus_pi_maps_to_plus_pi(self):
        assert simrobot.wrap_angle(-math.pi) == math.pi

    def test_three_half_pi_wraps_negative(self):
        assert simrobot.wrap_angle(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)

    def test_zero_and_small_angles_pass_through(self):
        assert simrobot.wrap_angle(0.0) == 0.0
        assert simrobot.wrap_angle(0.25) == pytest.approx(0.25)
        assert simrobot.wrap_angle(-0.25) == pytest.approx(-0.25)

    def test_full_turn_is_identity(self):
        assert simrobot.wrap_angle(2.0 * math.pi + 0.3) == pytest.approx(0.3)


# --- the plant -------------------------------------------------------------------


class TestSimStep:
    def setup_method(self):
        self.cfg = arm_config()
        self.chains = simrobot.config_chains(self.cfg)
        self.state = start_state(self.cfg)

    def test_no_commands_advances_time_only(self):
        out = simrobot.sim_step(self.state, [], self.chains, dt=0.01)
        assert out.t_ns == self.state.t_ns + 10_000_000
        assert np.array_equal(out.configurations["arm6"], self.state.configurations["arm6"])
        assert out.base == self.state.base and out.gimbal == self.state.gimbal

    def test_arm_velocity_integrates(self):
        qdot = np.array([0.1, 0.0, -0.2, 0.0, 0.0, 0.0])
        out = simrobot.sim_step(self.state, [teleop.ArmVelocity("arm6", qdot)], self.chains, dt=0.5)
        assert out.configurations["arm6"] == pytest.approx(Q_START + 0.5 * qdot)

    def test_arm_velocity_clamps_at_joint_limits(self):
        qdot = np.array([100.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        out = simrobot.sim_step(self.state, [teleop.ArmVelocity("arm6", qdot)], self.chains, dt=1.0)
        lo, hi = self.chains["arm6"].position_limits()
        assert out.configurations["arm6"][0] == hi[0]

    def test_wrong_qdot_width_rejected(self):
        with pytest.raises(DimensionMismatch):
            simrobot.sim_step(
                self.state, [teleop.ArmVelocity("arm6", np.zeros(3))], self.chains, dt=0.1
            )

    def test_unknown_chain_rejected(self):
        with pytest.raises(DimensionMismatch):
            simrobot.sim_step(
                self.state, [teleop.ArmVelocity("ghost", np.zeros(6))], self.chains, dt=0.1
            )

    def test_base_drives_forward_along_heading_zero(self):
        out = simrobot.sim_step(self.state, [teleop.BaseVelocity(vx=1.0)], self.chains, dt=0.1)
        assert out.base[0] == pytest.approx(0.1)
        assert out.base[1] == 0.0

    def test_base_forward_at_quarter_turn_moves_along_y(self):
        state = replace(self.state, base=(0.0, 0.0, math.pi / 2))
        out = simrobot.sim_step(state, [teleop.BaseVelocity(vx=1.0)], self.chains, dt=0.1)
        assert abs(out.base[0]) < 1e-12
        assert out.base[1] == pytest.approx(0.1, abs=1e-12)

    def test_base_strafe_moves_along_body_y(self):
        out = simrobot.sim_step(self.state, [teleop.BaseVelocity(vy=0.5)], self.chains, dt=0.2)
        assert out.base[0] == 0.0
        assert out.base[1] == pytest.approx(0.1)

    def test_base_heading_wraps(self):
        state = replace(self.state, base=(0.0, 0.0, 3.0))
        out = simrobot.sim_step(state, [teleop.BaseVelocity(wz=2.0)], self.chains, dt=0.2)
        assert out.base[2] == pytest.approx(3.4 - 2.0 * math.pi)

    def test_gimbal_and_gripper_apply_directly(self):
        out = simrobot.sim_step(
            self.state,
            [teleop.GimbalAngles(yaw=0.4, pitch=-0.2), teleop.Gripper("right", 0.7)],
            self.chains,
            dt=0.1,
        )
        assert out.gimbal == (0.4, -0.2)
        assert out.grippers["right"] == 0.7

    def test_command_failures_are_inert(self):
        out = simrobot.sim_step(
            self.state, [teleop.CommandFailure("arm.right", "boom")], self.chains, dt=0.1
        )
        assert np.array_equal(out.configurations["arm6"], self.state.configurations["arm6"])

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ValueError):
            simrobot.sim_step(self.state, [], self.chains, dt=0.0)

    def test_state_is_immutable(self):
        with pytest.raises(ValueError):
            self.state.configurations["arm6"][0] = 9.9


# --- network emulation ------------------------------------------------------------


class TestNetworkEmulation:
    def test_parse_constant(self):
        emu = simrobot.parse_emulation("constant:10")
        assert emu.delay_ms == (10.0, 10.0)

    def test_parse_uniform(self):
        emu = simrobot.parse_emulation("uniform:5:15", drop=0.1, seed=7)
        assert emu.delay_ms == (5.0, 15.0)
        assert emu.drop_probability == 0.1 and emu.seed == 7

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            simrobot.parse_emulation("gaussian:3")

    def test_invalid_ranges_rejected(self):
        with pytest.raises(ValueError):
            NetworkEmulation(delay_ms=(5.0, 2.0))
        with pytest.raises(ValueError):
            NetworkEmulation(drop_probability=1.0)
        with pytest.raises(ValueError):
            NetworkEmulation(delay_ms=(-1.0, 2.0))

    def test_no_emulation_passes_timestamps_through(self):
        packets = [controller_packet(k) for k in range(5)]
        arrivals = simrobot.emulate_arrivals(packets, None)
        assert [t for t, _ in arrivals] == [p.timestamp for p in packets]

    def test_constant_delay_shifts_every_arrival(self):
        packets = [controller_packet(k) for k in range(5)]
        emu = NetworkEmulation(delay_ms=(10.0, 10.0))
        arrivals = simrobot.emulate_arrivals(packets, emu)
        assert [t for t, _ in arrivals] == [p.timestamp + 10_000_000 for p in packets]

    def test_same_seed_same_arrivals(self):
        packets = [controller_packet(k) for k in range(200)]
        emu = NetworkEmulation(delay_ms=(2.0, 12.0), drop_probability=0.3, seed=5)
        a = simrobot.emulate_arrivals(packets, emu)
        b = simrobot.emulate_arrivals(packets, emu)
        assert a == b

    def test_different_seed_different_arrivals(self):
        packets = [controller_packet(k) for k in range(200)]
        a = simrobot.emulate_arrivals(packets, NetworkEmulation((2.0, 12.0), 0.3, seed=1))
        b = simrobot.emulate_arrivals(packets, NetworkEmulation((2.0, 12.0), 0.3, seed=2))
        assert a != b

    def test_drop_rate_roughly_honored(self):
        packets = [controller_packet(k) for k in range(1000)]
        emu = NetworkEmulation(drop_probability=0.2, seed=0)
        survivors = simrobot.emulate_arrivals(packets, emu)
        assert 700 <= len(survivors) <= 880

    def test_arrivals_sorted_even_when_jitter_reorders(self):
        packets = [controller_packet(k) for k in range(300)]
        emu = NetworkEmulation(delay_ms=(0.0, 30.0), seed=3)
        arrivals = simrobot.emulate_arrivals(packets, emu)
        times = [t for t, _ in arrivals]
        assert times == sorted(times)
        sequences = [p.sequence for _, p in arrivals]
        assert sequences != sorted(sequences)  # jitter actually reordered the wire


# --- offline sessions ---------------------------------------------------------------


class TestRunSession:
    def setup_method(self):
        self.cfg = arm_config()

    def test_empty_inputs_rejected(self):
        with pytest.raises(EmptyStream):
            simrobot.run_session([], self.cfg)

    def test_tick_per_packet_on_the_shared_grid(self):
        packets = [controller_packet(k) for k in range(50)]
        result = simrobot.run_session(packets, self.cfg, initial=start_state(self.cfg))
        assert len(result.states) == 50
        assert result.consumed == tuple(range(50))

    def test_sample_and_hold_across_gaps(self):
        packets = [controller_packet(0, grip=1.0), controller_packet(10, grip=1.0)]
        result = simrobot.run_session(packets, self.cfg, initial=start_state(self.cfg))
        assert len(result.states) == 11
        assert result.consumed == (0,) * 10 + (10,)

    def test_trace_is_byte_identical_across_runs(self):
        session = scripted.smooth_line_session(distance=0.05)
        initial = start_state(self.cfg, t_ns=session.packets[0].timestamp)
        emu = NetworkEmulation(delay_ms=(2.0, 12.0), drop_probability=0.5, seed=11)
        a = simrobot.run_session(session.packets, self.cfg, emulation=emu, initial=initial)
        b = simrobot.run_session(session.packets, self.cfg, emulation=emu, initial=initial)
        assert a.trace() == b.trace()
        assert a.consumed == b.consumed

    def test_all_packets_dropped_is_an_error(self):
        packets = [controller_packet(k) for k in range(3)]
        emu = NetworkEmulation(drop_probability=0.99, seed=4)  # seed drops all three
        with pytest.raises(EmptyStream):
            simrobot.run_session(packets, self.cfg, emulation=emu)

    def test_consumed_sequences_never_regress_under_jitter_and_drop(self):
        session = scripted.smooth_line_session(distance=0.05)
        initial = start_state(self.cfg, t_ns=session.packets[0].timestamp)
        for seed in range(4):
            emu = NetworkEmulation(delay_ms=(0.0, 30.0), drop_probability=0.2, seed=seed)
            result = simrobot.run_session(session.packets, self.cfg, emulation=emu, initial=initial)
            acted = [s for s in result.consumed if s is not None]
            assert all(b >= a for a, b in zip(acted, acted[1:]))

    def test_episode_recording_dimensions_and_rate(self):
        session = scripted.smooth_line_session(distance=0.05, duration_s=1.0, hold_s=0.5)
        initial = start_state(self.cfg, t_ns=session.packets[0].timestamp)
        result = simrobot.run_session(
            session.packets, self.cfg, initial=initial, record_rate_hz=50.0
        )
        episode = result.episode
        span_s = (len(session.packets) - 1) / session.rate_hz
        assert abs(len(episode.frames) - (span_s * 50.0 + 1)) <= 1
        assert episode.dims == {"joint_state": 6, "command": 11}
        assert episode.rate_hz == 50.0


class TestScriptedTracking:
    """End-to-end closed loop against the scripted sessions' ground truth."""

    def setup_method(self):
        self.cfg = arm_config()
        self.chain = resources.load_chain("arm6")
        self.rotation = get_convention("xr_to_robot").matrix
        self.anchor = forward_kinematics(self.chain, Q_START, "tool")

    def run(self, session, emulation=None):
        initial = start_state(self.cfg, t_ns=session.packets[0].timestamp)
        return simrobot.run_session(
            session.packets, self.cfg, rate_hz=session.rate_hz,
            emulation=emulation, initial=initial,
        )

    def commanded(self, device_position):
        return self.anchor.position + self.rotation @ np.asarray(device_position, dtype=float)

    def test_square_corners_hit_within_two_millimeters(self):
        session = scripted.square_path_session(side=0.06)
        result = self.run(session)
        for mark in session.marks:
            ee = tool_pose(result.states[mark.index])
            error = np.linalg.norm(ee.position - self.commanded(mark.position))
            assert error < 2e-3, f"{mark.name}: {error * 1e3:.3f} mm off"

    def test_smooth_line_settles_under_a_millimeter_and_half_degree(self):
        session = scripted.smooth_line_session(distance=0.05)
        result = self.run(session)
        mark = session.mark("settled")
        ee = tool_pose(result.states[mark.index])
        assert np.linalg.norm(ee.position - self.commanded(mark.position)) < 1e-3
        assert orientation_error_deg(ee.orientation, self.anchor.orientation) < 0.5

    def per_tick_errors(self, session, result):
        """ee error against the operator's current commanded position.

        states[k] is the post-step state one period after packet k was sent,
        so the truth at that instant is packet k+1's position; the lossless
        loop then shows its real one-period lag instead of a degenerate zero.
        """
        errors = []
        for k in range(session.engage_index + 1, len(session.packets) - 1):
            if k >= len(result.states):
                break
            truth = self.commanded(session.packets[k + 1].controllers.right.pose[:3])
            ee = tool_pose(result.states[k])
            errors.append(np.linalg.norm(ee.position - truth))
        return np.array(errors)

    def test_twenty_percent_drop_degrades_smoothly(self):
        session = scripted.smooth_line_session(distance=0.05)
        lossless = self.per_tick_errors(session, self.run(session))
        emu = NetworkEmulation(delay_ms=(2.0, 12.0), drop_probability=0.2, seed=0)
        droppy_result = self.run(session, emulation=emu)
        droppy = self.per_tick_errors(session, droppy_result)

        assert droppy.max() <= 5.0 * lossless.max()
        # and the loop still recovers to the exact steady state
        mark = session.mark("settled")
        ee = tool_pose(droppy_result.states[min(mark.index, len(droppy_result.states) - 1)])
        assert np.linalg.norm(ee.position - self.commanded(mark.position)) < 1e-3


# --- state encoding -----------------------------------------------------------------


class TestStateEncoding:
    def test_state_frames_are_canonical_json(self):
        cfg = arm_config()
        state = start_state(cfg, t_ns=123)
        payload = simrobot.encode_state(state)
        decoded = json.loads(payload)
        assert list(decoded) == ["t", "chains", "base", "gimbal", "grippers"]
        assert decoded["t"] == 123
        assert decoded["chains"]["arm6"] == pytest.approx(list(Q_START))

    def test_equal_states_encode_identically(self):
        cfg = arm_config()
        a = start_state(cfg, t_ns=5)
        b = start_state(cfg, t_ns=5)
        assert simrobot.encode_state(a) == simrobot.encode_state(b)

    def test_save_state_trace_round_trips_by_line(self, tmp_path):
        cfg = arm_config()
        states = [start_state(cfg, t_ns=k) for k in range(3)]
        path = tmp_path / "trace.jsonl"
        simrobot.save_state_trace(states, path)
        lines = path.read_bytes().splitlines()
        assert lines == [simrobot.encode_state(s) for s in states]


# --- live service ---------------------------------------------------------------------


class TestTeleopService:
    """Loopback websocket sessions against the live service."""

    def drive(self, service, seconds=0.6, move=0.04, collect=True):
        """Push a grip-engaged right-controller glide, reading state frames."""
        from websockets.sync.client import connect

        host, port = service.address
        frames = []
        with connect(f"ws://{host}:{port}") as conn:
            count = round(seconds * 90)
            for k in range(count):
                x = move * (k / (count - 1))
                conn.send(encode_packet(controller_packet(k, (x, 0.0, 0.0), grip=1.0)).decode())
                if collect:
                    try:
                        frames.append(conn.recv(timeout=0.0))
                    except TimeoutError:
                        pass
                time.sleep(1.0 / 90.0)
            deadline = time.monotonic() + 1.0
            while collect and time.monotonic() < deadline:
                try:
                    frames.append(conn.recv(timeout=0.2))
                except TimeoutError:
                    break
        return frames

    def test_pushed_packets_drive_the_simulation(self):
        with simrobot.TeleopService(arm_config(), port=0, rate_hz=90.0) as service:
            frames = self.drive(service)
            assert service.packets_in > 0
            assert len(frames) > 10
            last = json.loads(frames[-1])
            assert list(last) == ["t", "chains", "base", "gimbal", "grippers"]
            q = np.array(last["chains"]["arm6"])
            assert q.shape == (6,)
            assert np.linalg.norm(q) > 1e-3  # the arm left the zero pose

    def test_malformed_packets_are_rejected_not_fatal(self):
        from websockets.sync.client import connect

        with simrobot.TeleopService(arm_config(), port=0, rate_hz=90.0) as service:
            host, port = service.address
            with connect(f"ws://{host}:{port}") as conn:
                conn.send("this is not a packet")
                conn.send(encode_packet(controller_packet(0)).decode())
                time.sleep(0.1)
            deadline = time.monotonic() + 1.0
            while service.packets_in < 1 and time.monotonic() < deadline:
                time.sleep(0.01)
            assert service.packets_in == 1

    def test_session_tap_records_every_pushed_packet(self, tmp_path):
        path = tmp_path / "session.jsonl"
        with simrobot.TeleopService(arm_config(), port=0, rate_hz=90.0, session_path=path) as svc:
            self.drive(svc, seconds=0.3, collect=False)
            pushed = svc.packets_in
        lines = path.read_bytes().splitlines()
        header = json.loads(lines[0])
        assert header["format"] == "tracking_session"
        packets = [decode_packet(line) for line in lines[1:]]
        assert len(packets) == pushed  # the tap is lossless
        sequences = [p.sequence for p in packets]
        assert sequences == sorted(sequences)
