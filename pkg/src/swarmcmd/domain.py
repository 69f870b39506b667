"""Core vocabulary types and the canonical JSON envelope codec.

Every message that crosses the bus or lands in an append-only log goes
through `encode_*`/`decode_*` here, so the byte layout is fixed in exactly
one place: UTF-8 JSON, fixed key order, no insignificant whitespace.
Decoders ignore unknown fields so newer writers stay compatible.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import BadModality, EmptyKeywords, MalformedMessage, MissingField

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class Modality(str, Enum):
    TEXT = "Text"
    VOICE = "Voice"
    TELEOP = "Teleop"

    @classmethod
    def parse(cls, value: object) -> "Modality":
        for m in cls:
            if m.value == value:
                return m
        raise BadModality(value)


class FeedbackStatus(str, Enum):
    RECEIVED = "Received"
    EXECUTING = "Executing"
    COMPLETED = "Completed"
    FAILED = "Failed"

    @classmethod
    def parse(cls, value: object) -> "FeedbackStatus":
        for s in cls:
            if s.value == value:
                return s
        raise MalformedMessage(f"unknown feedback status: {value!r}")


@dataclass(frozen=True)
class KeywordSet:
    """Ordered, de-duplicated, lowercase keyword tokens."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        seen = set()
        for t in self.tokens:
            if not t or t != t.strip() or t != t.lower():
                raise ValueError(f"invalid keyword token: {t!r}")
            if t in seen:
                raise ValueError(f"duplicate keyword token: {t!r}")
            seen.add(t)

    def __contains__(self, token: str) -> bool:
        return token in self.tokens

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def as_set(self) -> frozenset[str]:
        return frozenset(self.tokens)

    def join(self) -> str:
        return " ".join(self.tokens)


def tokenize(text: str) -> KeywordSet:
    """Split on whitespace/punctuation, lowercase, dedup keeping first occurrence."""
    tokens: list[str] = []
    seen: set[str] = set()
    for tok in _TOKEN_RE.findall(text.lower()):
        if tok not in seen:
            seen.add(tok)
            tokens.append(tok)
    if not tokens:
        raise EmptyKeywords(f"no keywords in {text!r}")
    return KeywordSet(tuple(tokens))


def normalize_heading(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    while theta > math.pi:
        theta -= 2.0 * math.pi
    while theta <= -math.pi:
        theta += 2.0 * math.pi
    return theta


@dataclass(frozen=True)
class RobotState:
    robot_id: str
    x: float
    y: float
    heading: float
    battery: float
    status: str = "idle"

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_heading(self.heading))
        object.__setattr__(self, "battery", min(100.0, max(0.0, self.battery)))

    def pose(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.heading)


@dataclass(frozen=True)
class CommandEnvelope:
    target: str
    command: str
    modality: Modality
    sequence: int
    issued_at: int  # wall-clock milliseconds

    def __post_init__(self):
        if not self.target:
            raise ValueError("envelope target must be nonempty")
        if not self.command:
            raise ValueError("envelope command must be nonempty")


@dataclass(frozen=True)
class FeedbackEnvelope:
    robot_id: str
    command_sequence: int
    status: FeedbackStatus
    detail: str
    state_snapshot: RobotState


def _compact(obj: object) -> bytes:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def encode_envelope(env: CommandEnvelope) -> bytes:
    """Canonical wire form; key order is part of the protocol."""
    return _compact(
        {
            "target": env.target,
            "command": env.command,
            "modality": env.modality.value,
            "sequence": env.sequence,
            "issued_at": env.issued_at,
        }
    )


def _load_object(payload: bytes | str) -> dict:
    if isinstance(payload, bytes):
        try:
            payload = payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedMessage(f"not UTF-8: {exc}") from exc
    try:
        obj = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise MalformedMessage(f"bad JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedMessage("payload root must be a JSON object")
    return obj


def _require(obj: dict, name: str, kinds: type | tuple) -> object:
    if name not in obj:
        raise MissingField(name)
    value = obj[name]
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise MalformedMessage(f"field {name} has wrong type: {value!r}")
    return value


def decode_envelope(payload: bytes | str) -> CommandEnvelope:
    obj = _load_object(payload)
    target = _require(obj, "target", str)
    command = _require(obj, "command", str)
    modality = Modality.parse(_require(obj, "modality", str))
    sequence = _require(obj, "sequence", int)
    issued_at = _require(obj, "issued_at", int)
    if not target or not command:
        raise MalformedMessage("target and command must be nonempty")
    return CommandEnvelope(target, command, modality, int(sequence), int(issued_at))


def encode_state(state: RobotState) -> dict:
    return {
        "robot_id": state.robot_id,
        "pose": [state.x, state.y, state.heading],
        "battery": state.battery,
        "status": state.status,
    }


def decode_state(obj: object) -> RobotState:
    if not isinstance(obj, dict):
        raise MalformedMessage("state_snapshot must be an object")
    robot_id = _require(obj, "robot_id", str)
    pose = _require(obj, "pose", list)
    if len(pose) != 3 or not all(isinstance(v, (int, float)) for v in pose):
        raise MalformedMessage(f"bad pose: {pose!r}")
    battery = _require(obj, "battery", (int, float))
    status = _require(obj, "status", str)
    return RobotState(robot_id, float(pose[0]), float(pose[1]), float(pose[2]), float(battery), status)


def encode_feedback(fb: FeedbackEnvelope) -> bytes:
    return _compact(
        {
            "robot_id": fb.robot_id,
            "command_sequence": fb.command_sequence,
            "status": fb.status.value,
            "detail": fb.detail,
            "state_snapshot": encode_state(fb.state_snapshot),
        }
    )


def decode_feedback(payload: bytes | str) -> FeedbackEnvelope:
    obj = _load_object(payload)
    robot_id = _require(obj, "robot_id", str)
    sequence = _require(obj, "command_sequence", int)
    status = FeedbackStatus.parse(_require(obj, "status", str))
    detail = _require(obj, "detail", str)
    state = decode_state(obj.get("state_snapshot"))
    return FeedbackEnvelope(robot_id, int(sequence), status, detail, state)


def filter_stopwords(tokens: Iterable[str], stopwords: frozenset[str]) -> tuple[str, ...]:
    return tuple(t for t in tokens if t not in stopwords)
