from __future__ import annotations

import math
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import oracle_patrol_pose
from swarmcmd.bus import BusClient
from swarmcmd.domain import (
    CommandEnvelope,
    FeedbackStatus,
    Modality,
    RobotState,
    decode_feedback,
    encode_envelope,
)
from swarmcmd.errors import UnknownKey, UnrecognizedCommand
from swarmcmd.robot import (
    PATROL,
    RobotNode,
    VelocityCommand,
    accept_envelope,
    interpret_command,
    map_teleop_key,
    plan_energy,
    run_plan,
    slice_durations,
    step_kinematics,
    to_velocity,
)

COMMANDS = "swarmchat/commands"
FEEDBACK = "swarmchat/feedback"


@pytest.fixture
def motion(config):
    return config.motion


def env(target, command, modality=Modality.TEXT, seq=1):
    return CommandEnvelope(target, command, modality, seq, 0)


class TestTargetFiltering:
    def test_exact_match_accepts(self):
        assert accept_envelope(env("TurtleBot 1", "x"), "TurtleBot 1")

    def test_other_target_ignored(self):
        assert not accept_envelope(env("TurtleBot 2", "x"), "TurtleBot 1")

    def test_case_mismatch_ignored(self):
        assert not accept_envelope(env("turtlebot 1", "x"), "TurtleBot 1")


class TestInterpretation:
    def test_patrol_precedes_forward(self, motion):
        plan = interpret_command(
            "Move forward and patrol the area [from (0.00,0.00); battery 100%]",
            Modality.TEXT,
            motion,
        )
        assert plan.label == PATROL
        assert len(plan.commands) == 8  # [forward, turn-left] x 4

    def test_voice_command_run_right(self, motion):
        plan = interpret_command("run right", Modality.VOICE, motion)
        assert plan.label == "turn-right"
        assert plan.commands[0].angular < 0

    def test_unrecognized(self, motion):
        with pytest.raises(UnrecognizedCommand):
            interpret_command("make me coffee", Modality.TEXT, motion)

    def test_teleop_uses_trailing_key(self, motion):
        plan = interpret_command(
            "Patrol area [from (0.00,0.00); battery 100%] P", Modality.TELEOP, motion
        )
        assert plan.label == PATROL

    def test_teleop_unknown_key(self, motion):
        with pytest.raises(UnknownKey):
            interpret_command("whatever X", Modality.TELEOP, motion)

    def test_voice_same_as_text(self, motion):
        text = "go backward now"
        assert interpret_command(text, Modality.TEXT, motion) == interpret_command(
            text, Modality.VOICE, motion
        )


class TestTeleopKeymap:
    @pytest.mark.parametrize(
        "key,primitive",
        [
            ("P", "patrol"), ("p", "patrol"),
            ("F", "forward"), ("W", "forward"),
            ("B", "backward"), ("S", "backward"),
            ("L", "turn-left"), ("A", "turn-left"),
            ("R", "turn-right"), ("D", "turn-right"),
        ],
    )
    def test_nine_key_map(self, key, primitive):
        assert map_teleop_key(key) == primitive

    def test_unknown(self):
        with pytest.raises(UnknownKey):
            map_teleop_key("X")


class TestVelocityConversion:
    def test_forward_sign(self, motion):
        plan = to_velocity("forward", motion)
        assert plan.commands[0].linear > 0
        assert plan.commands[0].angular == 0

    def test_turn_right_sign(self, motion):
        plan = to_velocity("turn-right", motion)
        assert plan.commands[0].angular < 0
        assert plan.commands[0].linear == 0

    def test_speeds_respect_limits(self, motion):
        for primitive in ("forward", "backward", "turn-left", "turn-right", "patrol"):
            for cmd in to_velocity(primitive, motion).commands:
                assert abs(cmd.linear) <= motion.max_linear
                assert abs(cmd.angular) <= motion.max_angular
                assert cmd.duration > 0

    def test_patrol_circuit_closes(self, motion):
        start = RobotState("r", 0.0, 0.0, 0.0, 100.0)
        final = run_plan(start, to_velocity("patrol", motion), motion)
        ox, oy, oh = oracle_patrol_pose(
            motion.linear_speed, motion.angular_speed, motion.move_duration_s, motion.dt_s
        )
        assert final.x == pytest.approx(ox, abs=1e-12)
        assert final.y == pytest.approx(oy, abs=1e-12)
        assert abs(final.x) < 1e-6 and abs(final.y) < 1e-6
        assert abs(final.heading - oh) < 1e-12
        assert abs(final.heading) < 1e-6


class TestKinematics:
    def test_axis_aligned_integration(self):
        state = RobotState("r", 0, 0, 0, 100)
        moved = step_kinematics(state, VelocityCommand(0.2, 0.0, 1.0), 1.0, 0.0)
        assert (moved.x, moved.y, moved.heading) == (pytest.approx(0.2), 0.0, 0.0)

    def test_pure_rotation_keeps_position(self):
        state = RobotState("r", 1.0, -2.0, 0.0, 100)
        rotated = state
        for dt in slice_durations((math.pi / 2) / 0.8, 0.05):
            rotated = step_kinematics(rotated, VelocityCommand(0.0, 0.8, 1.0), dt, 0.05)
        assert rotated.x == 1.0 and rotated.y == -2.0  # exact: no translation term
        assert rotated.heading == pytest.approx(math.pi / 2, abs=1e-9)

    def test_pure_translation_keeps_heading(self):
        state = RobotState("r", 0, 0, 0.7, 100)
        moved = state
        for _ in range(100):
            moved = step_kinematics(moved, VelocityCommand(0.3, 0.0, 1.0), 0.05, 0.05)
        assert moved.heading == pytest.approx(0.7, abs=1e-9)

    def test_battery_drains_with_time(self):
        state = RobotState("r", 0, 0, 0, 100)
        after = step_kinematics(state, VelocityCommand(0.1, 0.0, 1.0), 2.0, 0.05)
        assert after.battery == pytest.approx(99.9)

    @given(
        st.floats(min_value=-0.5, max_value=0.5),
        st.floats(min_value=-1.5, max_value=1.5),
        st.integers(min_value=1, max_value=50),
    )
    def test_battery_never_increases(self, linear, angular, steps):
        state = RobotState("r", 0, 0, 0, 80)
        vel = VelocityCommand(linear, angular, 1.0)
        previous = state.battery
        for _ in range(steps):
            state = step_kinematics(state, vel, 0.05, 0.05)
            assert state.battery <= previous
            previous = state.battery

    def test_slice_durations_sum_exact(self):
        for duration in (2.0, (math.pi / 2) / 0.8, 0.05, 0.174):
            slices = slice_durations(duration, 0.05)
            assert sum(slices) == pytest.approx(duration, abs=1e-12)
            assert all(s > 0 for s in slices)


class FeedbackCollector:
    def __init__(self, broker_port):
        self.client = BusClient("127.0.0.1", broker_port).connect()
        self.sub = self.client.subscribe(FEEDBACK)

    def drain(self, n, timeout=5.0):
        out = []
        deadline = time.monotonic() + timeout
        while len(out) < n and time.monotonic() < deadline:
            try:
                out.append(decode_feedback(self.sub.get(timeout=0.2)))
            except Exception:
                continue
        return out

    def close(self):
        self.client.close()


@pytest.fixture
def node_stack(broker, config, tmp_path):
    collector = FeedbackCollector(broker.port)
    node = RobotNode(
        "TurtleBot 1",
        "127.0.0.1",
        broker.port,
        motion=config.motion,
        received_log=tmp_path / "received.jsonl",
    ).start()
    publisher = BusClient("127.0.0.1", broker.port).connect()
    time.sleep(0.05)
    yield node, publisher, collector, tmp_path / "received.jsonl"
    publisher.close()
    collector.close()
    node.stop()


class TestRobotNode:
    def test_lifecycle_feedback_order(self, node_stack):
        node, publisher, collector, log_path = node_stack
        envelope = env("TurtleBot 1", "move forward [from (0.00,0.00); battery 100%]")
        publisher.publish(COMMANDS, encode_envelope(envelope))
        feedback = collector.drain(3)
        assert [f.status for f in feedback] == [
            FeedbackStatus.RECEIVED,
            FeedbackStatus.EXECUTING,
            FeedbackStatus.COMPLETED,
        ]
        assert all(f.command_sequence == 1 for f in feedback)
        # battery strictly decreases across the motion
        assert feedback[-1].state_snapshot.battery < feedback[0].state_snapshot.battery
        assert log_path.read_bytes().strip() == encode_envelope(envelope)

    def test_ignores_other_targets(self, node_stack):
        node, publisher, collector, log_path = node_stack
        publisher.publish(COMMANDS, encode_envelope(env("TurtleBot 2", "move forward")))
        publisher.publish(
            COMMANDS, encode_envelope(env("TurtleBot 1", "move forward", seq=2))
        )
        feedback = collector.drain(3)
        assert all(f.command_sequence == 2 for f in feedback)
        assert not log_path.exists() or b"TurtleBot 2" not in log_path.read_bytes()

    def test_unknown_key_single_failed(self, node_stack):
        node, publisher, collector, _ = node_stack
        publisher.publish(
            COMMANDS, encode_envelope(env("TurtleBot 1", "oops X", Modality.TELEOP))
        )
        feedback = collector.drain(2)
        assert [f.status for f in feedback] == [
            FeedbackStatus.RECEIVED,
            FeedbackStatus.FAILED,
        ]

    def test_unrecognized_text_failed(self, node_stack):
        node, publisher, collector, _ = node_stack
        publisher.publish(COMMANDS, encode_envelope(env("TurtleBot 1", "make me coffee")))
        feedback = collector.drain(2)
        assert feedback[-1].status is FeedbackStatus.FAILED
        assert feedback[-1].detail == "unrecognized command"

    def test_depleted_battery_refuses_motion(self, broker, config):
        collector = FeedbackCollector(broker.port)
        node = RobotNode(
            "TurtleBot 1", "127.0.0.1", broker.port, motion=config.motion, battery=0.01
        ).start()
        publisher = BusClient("127.0.0.1", broker.port).connect()
        try:
            publisher.publish(COMMANDS, encode_envelope(env("TurtleBot 1", "move forward")))
            feedback = collector.drain(2)
            assert [f.status for f in feedback] == [
                FeedbackStatus.RECEIVED,
                FeedbackStatus.FAILED,
            ]
            assert "battery depleted" in feedback[-1].detail
            assert feedback[-1].state_snapshot.status == "battery depleted"
        finally:
            publisher.close()
            collector.close()
            node.stop()

    def test_energy_precheck_math(self, motion):
        plan = to_velocity("forward", motion)
        assert plan_energy(plan, motion.battery_drain_per_s) == pytest.approx(
            motion.move_duration_s * motion.battery_drain_per_s
        )
