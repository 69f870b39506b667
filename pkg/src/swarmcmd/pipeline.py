"""Decision pipeline: intent rules, task planning, modality choice, packaging.

Everything here is a pure function of its inputs except the sequence counter,
which is the single piece of mutable dispatch state and is lock-protected.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from enum import Enum

from .domain import CommandEnvelope, KeywordSet, Modality, RobotState, tokenize
from .errors import EmptyKeywords, UnknownRobot

ENRICHMENT_RE = re.compile(r"\s*\[from \([^)]*\); battery \d+%\]")
TELEOP_THRESHOLD = 0.85
VOICE_KEYWORD = "speak"


class IntentLabel(Enum):
    PATROL_MODE = "Patrol mode activated."
    NAVIGATION_MODE = "Navigation mode activated."
    GENERAL_OPERATION = "General operation."

    @property
    def display(self) -> str:
        return self.value


class SuggestionReason(str, Enum):
    HIGH_SIMILARITY = "HighSimilarity"
    SPEAK_KEYWORD = "SpeakKeyword"
    DEFAULT = "Default"


@dataclass(frozen=True)
class ModalitySuggestion:
    suggested: Modality
    reason: SuggestionReason
    user_selected: Modality
    overridden: bool

    def __post_init__(self):
        if self.overridden != (self.suggested != self.user_selected):
            raise ValueError("overridden flag inconsistent with choices")


@dataclass(frozen=True)
class PlannedCommand:
    base_context: str
    enriched_text: str
    robot_id: str
    state_used: RobotState
    stale: bool = False


def recognize_intent(keywords: KeywordSet) -> IntentLabel:
    """Rule order matters: patrol wins over go when both are present."""
    if len(keywords) == 0:
        raise EmptyKeywords("cannot recognize intent of empty keywords")
    if "patrol" in keywords:
        return IntentLabel.PATROL_MODE
    if "go" in keywords:
        return IntentLabel.NAVIGATION_MODE
    return IntentLabel.GENERAL_OPERATION


def _coord(value: float) -> float:
    # Avoid "-0.00" in the rendered suffix.
    return 0.0 if abs(value) < 0.005 else value


def enrich_context(context_text: str, state: RobotState) -> str:
    return (
        f"{context_text} [from ({_coord(state.x):.2f},{_coord(state.y):.2f});"
        f" battery {int(state.battery)}%]"
    )


def strip_enrichment(text: str) -> str:
    return ENRICHMENT_RE.sub("", text)


def plan_task(
    context_text: str,
    state: RobotState,
    *,
    state_age_s: float = 0.0,
    stale_after_s: float = 5.0,
) -> PlannedCommand:
    """Fold the robot's latest pose/battery into the command text.

    A stale snapshot only flags the plan; planning always proceeds.
    """
    return PlannedCommand(
        base_context=context_text,
        enriched_text=enrich_context(context_text, state),
        robot_id=state.robot_id,
        state_used=state,
        stale=state_age_s > stale_after_s,
    )


def suggest_modality(context_text: str, score: float) -> tuple[Modality, SuggestionReason]:
    if score >= TELEOP_THRESHOLD:
        return Modality.TELEOP, SuggestionReason.HIGH_SIMILARITY
    try:
        tokens = tokenize(context_text)
    except EmptyKeywords:
        tokens = None
    if tokens is not None and VOICE_KEYWORD in tokens:
        return Modality.VOICE, SuggestionReason.SPEAK_KEYWORD
    return Modality.TEXT, SuggestionReason.DEFAULT


def resolve_modality(
    suggested: Modality, reason: SuggestionReason, user_choice: Modality
) -> ModalitySuggestion:
    return ModalitySuggestion(
        suggested=suggested,
        reason=reason,
        user_selected=user_choice,
        overridden=suggested != user_choice,
    )


class SequenceCounter:
    """Strictly increasing, gap-free id source shared by all sessions."""

    def __init__(self, start: int = 0):
        self._value = start
        self._lock = threading.Lock()

    def next(self) -> int:
        with self._lock:
            self._value += 1
            return self._value

    def advance_past(self, value: int) -> None:
        with self._lock:
            self._value = max(self._value, value)


def package_command(
    planned: PlannedCommand,
    modality: Modality,
    known_robots: tuple[str, ...],
    counter: SequenceCounter,
    issued_at_ms: int,
    *,
    teleop_key: str | None = None,
) -> CommandEnvelope:
    """Build the wire envelope. For Teleop the key rides as the trailing token."""
    if planned.robot_id not in known_robots:
        raise UnknownRobot(planned.robot_id)
    command = planned.enriched_text
    if modality is Modality.TELEOP and teleop_key:
        command = f"{command} {teleop_key.upper()}"
    return CommandEnvelope(
        target=planned.robot_id,
        command=command,
        modality=modality,
        sequence=counter.next(),
        issued_at=issued_at_ms,
    )
