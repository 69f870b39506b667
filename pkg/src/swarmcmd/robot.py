"""Simulated swarm robot: command intake, interpretation, motion, feedback.

Motion uses a unicycle model integrated in fixed dt slices; time is logical,
so executions complete immediately while pose, heading, and battery evolve
exactly as they would in real time. A command addressed elsewhere is ignored
outright; an accepted one walks the Received -> Executing -> Completed/Failed
feedback lifecycle on the feedback topic.
"""

from __future__ import annotations

import logging
import math
import threading
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .bus import BusClient
from .config import MotionConfig
from .domain import (
    CommandEnvelope,
    FeedbackEnvelope,
    FeedbackStatus,
    Modality,
    RobotState,
    decode_envelope,
    encode_feedback,
    normalize_heading,
    tokenize,
)
from .errors import (
    EmptyKeywords,
    MalformedMessage,
    NotConnected,
    UnknownKey,
    UnrecognizedCommand,
)
from .pipeline import strip_enrichment

log = logging.getLogger(__name__)

FEEDBACK_BUFFER_LIMIT = 100

# Primitive names used across interpretation and velocity conversion.
PATROL = "patrol"
FORWARD = "forward"
BACKWARD = "backward"
TURN_LEFT = "turn-left"
TURN_RIGHT = "turn-right"
STOP = "stop"

TELEOP_KEYMAP = {
    "p": PATROL,
    "f": FORWARD,
    "w": FORWARD,
    "b": BACKWARD,
    "s": BACKWARD,
    "l": TURN_LEFT,
    "a": TURN_LEFT,
    "r": TURN_RIGHT,
    "d": TURN_RIGHT,
}

# Scan order is a contract: patrol outranks direction words in free text.
KEYWORD_PRIMITIVES = (
    ("patrol", PATROL),
    ("forward", FORWARD),
    ("backward", BACKWARD),
    ("left", TURN_LEFT),
    ("right", TURN_RIGHT),
    ("stop", STOP),
)


@dataclass(frozen=True)
class VelocityCommand:
    linear: float  # m/s
    angular: float  # rad/s
    duration: float  # s

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("velocity command duration must be positive")


@dataclass(frozen=True)
class MotionPlan:
    label: str
    commands: tuple[VelocityCommand, ...]

    def __post_init__(self):
        if not self.commands:
            raise ValueError("motion plan must contain at least one command")

    def duration(self) -> float:
        return sum(c.duration for c in self.commands)


def accept_envelope(env: CommandEnvelope, my_id: str) -> bool:
    """Exact, case-sensitive target match."""
    return env.target == my_id


def map_teleop_key(key: str) -> str:
    primitive = TELEOP_KEYMAP.get(key.lower())
    if primitive is None or len(key) != 1:
        raise UnknownKey(key)
    return primitive


def to_velocity(primitive: str, cfg: MotionConfig) -> MotionPlan:
    v = min(cfg.linear_speed, cfg.max_linear)
    w = min(cfg.angular_speed, cfg.max_angular)
    t = cfg.move_duration_s
    t_turn = (math.pi / 2.0) / w
    forward = VelocityCommand(v, 0.0, t)
    backward = VelocityCommand(-v, 0.0, t)
    left = VelocityCommand(0.0, w, t_turn)
    right = VelocityCommand(0.0, -w, t_turn)
    if primitive == FORWARD:
        return MotionPlan(FORWARD, (forward,))
    if primitive == BACKWARD:
        return MotionPlan(BACKWARD, (backward,))
    if primitive == TURN_LEFT:
        return MotionPlan(TURN_LEFT, (left,))
    if primitive == TURN_RIGHT:
        return MotionPlan(TURN_RIGHT, (right,))
    if primitive == PATROL:
        return MotionPlan(PATROL, (forward, left) * 4)  # square circuit
    if primitive == STOP:
        return MotionPlan(STOP, (VelocityCommand(0.0, 0.0, cfg.dt_s),))
    raise UnrecognizedCommand(f"no velocity mapping for {primitive!r}")


def interpret_command(command_text: str, modality: Modality, cfg: MotionConfig) -> MotionPlan:
    """Teleop reads the trailing key token; Text/Voice scan for motion keywords."""
    if modality is Modality.TELEOP:
        parts = command_text.split()
        key = parts[-1] if parts else ""
        return to_velocity(map_teleop_key(key), cfg)
    try:
        tokens = set(tokenize(strip_enrichment(command_text)).tokens)
    except EmptyKeywords:
        tokens = set()
    for keyword, primitive in KEYWORD_PRIMITIVES:
        if keyword in tokens:
            return to_velocity(primitive, cfg)
    raise UnrecognizedCommand(f"unrecognized command: {command_text!r}")


def step_kinematics(
    state: RobotState, vel: VelocityCommand, dt: float, drain_per_s: float
) -> RobotState:
    """Unicycle integration over one slice; battery drains with elapsed time."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return RobotState(
        robot_id=state.robot_id,
        x=state.x + vel.linear * math.cos(state.heading) * dt,
        y=state.y + vel.linear * math.sin(state.heading) * dt,
        heading=normalize_heading(state.heading + vel.angular * dt),
        battery=state.battery - drain_per_s * dt,
        status=state.status,
    )


def plan_energy(plan: MotionPlan, drain_per_s: float) -> float:
    return plan.duration() * drain_per_s


def slice_durations(duration: float, dt: float) -> list[float]:
    """Exact dt slicing: full slices plus the remainder, summing to duration."""
    n_full = int(duration / dt)
    consumed = n_full * dt
    slices = [dt] * n_full
    remainder = duration - consumed
    if remainder > 1e-12:
        slices.append(remainder)
    return slices


def run_plan(state: RobotState, plan: MotionPlan, cfg: MotionConfig) -> RobotState:
    """Integrate a whole plan; assumes the energy precheck already passed."""
    for command in plan.commands:
        for dt in slice_durations(command.duration, cfg.dt_s):
            state = step_kinematics(state, command, dt, cfg.battery_drain_per_s)
    return state


class RobotNode:
    """One simulated robot wired to the bus.

    The subscriber stream is drained by a single loop thread that owns the
    state; everything published outward is an immutable snapshot.
    """

    def __init__(
        self,
        robot_id: str,
        broker_host: str,
        broker_port: int,
        *,
        motion: MotionConfig,
        command_topic: str = "swarmchat/commands",
        feedback_topic: str = "swarmchat/feedback",
        start_pose: tuple[float, float, float] = (0.0, 0.0, 0.0),
        battery: float = 100.0,
        received_log: str | Path | None = None,
    ):
        self.robot_id = robot_id
        self.motion = motion
        self.command_topic = command_topic
        self.feedback_topic = feedback_topic
        self.state = RobotState(
            robot_id, start_pose[0], start_pose[1], start_pose[2], battery
        )
        self._client = BusClient(broker_host, broker_port)
        self._received_log = Path(received_log) if received_log is not None else None
        self._feedback_buffer: deque[bytes] = deque(maxlen=FEEDBACK_BUFFER_LIMIT)
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> "RobotNode":
        self._client.connect()
        self._subscription = self._client.subscribe(self.command_topic)
        self._thread = threading.Thread(
            target=self._run_loop, name=f"robot-{self.robot_id}", daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        self._client.close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)

    def _run_loop(self) -> None:
        while not self._stop.is_set():
            try:
                payload = self._subscription.get(timeout=0.2)
            except NotConnected:
                return
            except Exception:
                continue
            self._handle_payload(payload)

    # -- command handling ---------------------------------------------------

    def _handle_payload(self, payload: bytes) -> None:
        try:
            env = decode_envelope(payload)
        except MalformedMessage as exc:
            log.warning("%s: dropping malformed command: %s", self.robot_id, exc)
            return
        if not accept_envelope(env, self.robot_id):
            return
        self._log_received(payload)
        self._emit(env.sequence, FeedbackStatus.RECEIVED, "command accepted")
        try:
            plan = interpret_command(env.command, env.modality, self.motion)
        except (UnknownKey, UnrecognizedCommand) as exc:
            detail = "unrecognized command" if isinstance(exc, UnrecognizedCommand) else str(exc)
            self._emit(env.sequence, FeedbackStatus.FAILED, detail)
            return
        required = plan_energy(plan, self.motion.battery_drain_per_s)
        if self.state.battery < required:
            self.state = RobotState(
                self.state.robot_id,
                self.state.x,
                self.state.y,
                self.state.heading,
                self.state.battery,
                status="battery depleted",
            )
            self._emit(env.sequence, FeedbackStatus.FAILED, "battery depleted; motion refused")
            return
        self._set_status(f"executing {plan.label}")
        self._emit(env.sequence, FeedbackStatus.EXECUTING, f"executing {plan.label}")
        self.state = run_plan(self.state, plan, self.motion)
        self._set_status("idle")
        self._emit(env.sequence, FeedbackStatus.COMPLETED, f"completed {plan.label}")

    def _set_status(self, status: str) -> None:
        s = self.state
        self.state = RobotState(s.robot_id, s.x, s.y, s.heading, s.battery, status)

    def _log_received(self, payload: bytes) -> None:
        if self._received_log is None:
            return
        try:
            with self._received_log.open("ab") as fh:
                fh.write(payload + b"\n")
        except OSError as exc:
            log.warning("%s: received-log write failed: %s", self.robot_id, exc)

    # -- feedback -----------------------------------------------------------

    def _emit(self, sequence: int, status: FeedbackStatus, detail: str) -> None:
        fb = FeedbackEnvelope(self.robot_id, sequence, status, detail, self.state)
        # Queue then flush oldest-first; the deque caps the backlog at 100.
        self._feedback_buffer.append(encode_feedback(fb))
        while self._feedback_buffer:
            if not self._try_publish(self._feedback_buffer[0]):
                return
            self._feedback_buffer.popleft()

    def _try_publish(self, payload: bytes) -> bool:
        try:
            self._client.publish(self.feedback_topic, payload)
            return True
        except Exception:
            return False
