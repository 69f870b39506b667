"""Session management and end-to-end dispatch.

One Orchestrator owns the bus connection, the robot registry, the learning
tracker, the published/received logs, and all operator sessions. Dispatch runs
the full path: chosen context -> state enrichment -> modality resolution ->
envelope -> publish -> analytics, then the feedback listener closes the loop.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable

from .analytics import (
    InteractionRecord,
    LearningTracker,
    classify_satisfaction,
)
from .bus import BusClient
from .config import AppConfig
from .contexts import CandidateContext, ContextEngine, ContextProvider
from .domain import (
    CommandEnvelope,
    FeedbackEnvelope,
    FeedbackStatus,
    KeywordSet,
    Modality,
    RobotState,
    decode_envelope,
    decode_feedback,
    encode_envelope,
    encode_state,
    tokenize,
)
from .errors import (
    InvalidSessionState,
    MalformedMessage,
    MissingTeleopKey,
    SwarmCmdError,
    UnknownRobot,
)
from .pipeline import (
    ModalitySuggestion,
    SequenceCounter,
    SuggestionReason,
    package_command,
    plan_task,
    recognize_intent,
    resolve_modality,
    suggest_modality,
)

log = logging.getLogger(__name__)


def wall_clock_ms() -> int:
    return int(time.time() * 1000)


class LogicalClock:
    """Deterministic millisecond clock for reproducible scenario runs."""

    def __init__(self, start_ms: int = 0, step_ms: int = 1000):
        self._value = start_ms - step_ms
        self._step = step_ms
        self._lock = threading.Lock()

    def __call__(self) -> int:
        with self._lock:
            self._value += self._step
            return self._value


class SessionStatus(str, Enum):
    DRAFTING = "Drafting"
    SUGGESTED = "Suggested"
    DISPATCHED = "Dispatched"
    ACKNOWLEDGED = "Acknowledged"


@dataclass
class Session:
    session_id: str
    status: SessionStatus = SessionStatus.DRAFTING
    keywords: KeywordSet | None = None
    candidates: list[CandidateContext] = field(default_factory=list)
    suggestions: dict[int, tuple[Modality, SuggestionReason]] = field(default_factory=dict)
    intent_display: str | None = None
    dispatched_sequence: int | None = None
    record_index: int | None = None


class RobotRegistry:
    """Latest known state per robot, seeded from config, updated by feedback."""

    def __init__(self, config: AppConfig):
        self._lock = threading.Lock()
        self._states: dict[str, RobotState] = {}
        self._seen_at: dict[str, float] = {}
        for spec in config.robots:
            x, y, heading = spec.start_pose
            self._states[spec.robot_id] = RobotState(spec.robot_id, x, y, heading, spec.battery)
            self._seen_at[spec.robot_id] = time.monotonic()

    def ids(self) -> tuple[str, ...]:
        return tuple(self._states.keys())

    def latest(self, robot_id: str) -> tuple[RobotState, float]:
        with self._lock:
            if robot_id not in self._states:
                raise UnknownRobot(robot_id)
            return self._states[robot_id], time.monotonic() - self._seen_at[robot_id]

    def update(self, state: RobotState) -> None:
        with self._lock:
            if state.robot_id in self._states:
                self._states[state.robot_id] = state
                self._seen_at[state.robot_id] = time.monotonic()

    def snapshot(self) -> list[RobotState]:
        with self._lock:
            return list(self._states.values())


class Orchestrator:
    def __init__(
        self,
        config: AppConfig,
        *,
        data_dir: str | Path | None = None,
        clock: Callable[[], int] | None = None,
        provider: ContextProvider | None = None,
    ):
        self.config = config
        self.clock = clock or wall_clock_ms
        self.engine = ContextEngine(config, provider)
        self.registry = RobotRegistry(config)
        self.counter = SequenceCounter()
        self._data_dir = Path(data_dir) if data_dir is not None else None
        if self._data_dir is not None:
            self._data_dir.mkdir(parents=True, exist_ok=True)
        self.tracker = LearningTracker(
            learning_rate=config.learning_rate,
            initial_weight=config.initial_weight,
            stopwords=config.stopwords,
            log_path=self._path("interactions.jsonl"),
        )
        self._sessions: dict[str, Session] = {}
        self._session_seq = 0
        self._lock = threading.RLock()
        self._published: list[bytes] = []
        self._published_by_seq: dict[int, CommandEnvelope] = {}
        self._received: dict[str, list[CommandEnvelope]] = {}
        self._feedback_log: list[FeedbackEnvelope] = []
        self._acked_sequences: set[int] = set()
        self._sequence_session: dict[int, str] = {}
        self._terminal: dict[int, FeedbackStatus] = {}
        self._feedback_cond = threading.Condition()
        self._event_subscribers: list[queue.Queue] = []
        self._client: BusClient | None = None
        self._feedback_thread: threading.Thread | None = None
        self._stop = threading.Event()

    def _path(self, name: str) -> Path | None:
        return self._data_dir / name if self._data_dir is not None else None

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> "Orchestrator":
        self._restore()
        self._client = BusClient(self.config.broker_host, self.config.broker_port).connect()
        self._feedback_sub = self._client.subscribe(self.config.feedback_topic)
        self._feedback_thread = threading.Thread(
            target=self._feedback_loop, name="orchestrator-feedback", daemon=True
        )
        self._feedback_thread.start()
        return self

    def close(self) -> None:
        self._stop.set()
        if self._client is not None:
            self._client.close()
        if self._feedback_thread is not None:
            self._feedback_thread.join(timeout=2.0)

    def _restore(self) -> None:
        """Rebuild analytics and logs from a previous run's flat files."""
        interactions = self._path("interactions.jsonl")
        if interactions is not None and interactions.exists():
            count = self.tracker.replay(interactions)
            log.info("replayed %d interactions", count)
        published = self._path("published.jsonl")
        if published is not None and published.exists():
            for line in published.read_bytes().splitlines():
                if not line.strip():
                    continue
                env = decode_envelope(line)
                self._published.append(line)
                self._published_by_seq[env.sequence] = env
                self.counter.advance_past(env.sequence)
        received = self._path("received.jsonl")
        if received is not None and received.exists():
            for line in received.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                obj = json.loads(line)
                env = decode_envelope(json.dumps(obj["envelope"], separators=(",", ":")))
                self._received.setdefault(obj["robot_id"], []).append(env)

    # -- events -------------------------------------------------------------

    def subscribe_events(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            self._event_subscribers.append(q)
        return q

    def unsubscribe_events(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._event_subscribers:
                self._event_subscribers.remove(q)

    def _emit_event(self, event: dict[str, Any]) -> None:
        with self._lock:
            subscribers = list(self._event_subscribers)
        for q in subscribers:
            q.put(event)

    def session_for_sequence(self, sequence: int) -> str | None:
        with self._lock:
            return self._sequence_session.get(sequence)

    def event_matches_session(self, event: dict[str, Any], session_id: str) -> bool:
        """Session-scoped view of the stream: keep global events, drop other
        sessions' lifecycle/dispatch/feedback events."""
        if event.get("session_id") is not None:
            return event["session_id"] == session_id
        sequence = event.get("command_sequence")
        if sequence is None and isinstance(event.get("envelope"), dict):
            sequence = event["envelope"].get("sequence")
        if sequence is not None:
            return self.session_for_sequence(sequence) == session_id
        return True

    # -- sessions -----------------------------------------------------------

    def create_session(self) -> Session:
        with self._lock:
            self._session_seq += 1
            session = Session(session_id=f"session-{self._session_seq}")
            self._sessions[session.session_id] = session
            return session

    def get_session(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def submit_keywords(self, session_id: str, text: str) -> dict[str, Any]:
        session = self.get_session(session_id)
        keywords = tokenize(text)  # raises EmptyKeywords for blank input
        candidates = self.engine.candidates(keywords)
        intent = recognize_intent(keywords)
        with self._lock:
            session.status = SessionStatus.DRAFTING  # re-entry on new keywords
            session.keywords = keywords
            session.candidates = candidates
            session.suggestions = {
                c.index: suggest_modality(c.text, c.score) for c in candidates
            }
            session.intent_display = intent.display
            session.dispatched_sequence = None
            session.record_index = None
            session.status = SessionStatus.SUGGESTED
        result = {
            "session_id": session.session_id,
            "status": session.status.value,
            "keywords": list(keywords),
            "intent": intent.display,
            "candidates": [
                {
                    "index": c.index,
                    "text": c.text,
                    "jaccard": c.jaccard,
                    "score": c.score,
                    "suggested_modality": session.suggestions[c.index][0].value,
                    "suggestion_reason": session.suggestions[c.index][1].value,
                }
                for c in candidates
            ],
        }
        self._emit_event({"type": "session", "session_id": session.session_id,
                          "status": session.status.value})
        return result

    # -- dispatch -----------------------------------------------------------

    def dispatch(
        self,
        session_id: str,
        *,
        robot_id: str,
        candidate_index: int | None = None,
        custom_text: str | None = None,
        modality: str | Modality | None = None,
        teleop_key: str | None = None,
        comment: str | None = None,
    ) -> dict[str, Any]:
        session = self.get_session(session_id)
        if session.status is not SessionStatus.SUGGESTED:
            raise InvalidSessionState(
                f"session {session_id} is {session.status.value}, expected Suggested"
            )
        if robot_id not in self.registry.ids():
            raise UnknownRobot(robot_id)
        if (candidate_index is None) == (custom_text is None):
            raise SwarmCmdError("provide exactly one of candidate_index or custom_text")

        keywords = session.keywords
        assert keywords is not None
        top_context = session.candidates[0].text

        user_modality = Modality.parse(modality) if isinstance(modality, str) else modality

        if custom_text is not None:
            if user_modality is None:
                raise SwarmCmdError("custom commands need an explicit modality")
            chosen_text = custom_text
            custom = True
            _, base_score = self.engine.score_text(custom_text, keywords)
            # The selector never ran: display the user's own choice as suggested.
            suggestion = ModalitySuggestion(
                user_modality, SuggestionReason.DEFAULT, user_modality, False
            )
        else:
            by_index = {c.index: c for c in session.candidates}
            if candidate_index not in by_index:
                raise SwarmCmdError(f"no candidate with index {candidate_index}")
            candidate = by_index[candidate_index]
            chosen_text = candidate.text
            custom = False
            base_score = candidate.score
            suggested, reason = session.suggestions[candidate.index]
            if user_modality is None:
                user_modality = suggested  # accepting the suggestion
            suggestion = resolve_modality(suggested, reason, user_modality)

        if suggestion.user_selected is Modality.TELEOP and not teleop_key:
            raise MissingTeleopKey("Teleop dispatch requires a key")
        if suggestion.user_selected is not Modality.TELEOP and teleop_key:
            raise SwarmCmdError("teleop key only valid for Teleop dispatches")

        state, age_s = self.registry.latest(robot_id)
        planned = plan_task(
            chosen_text, state, state_age_s=age_s, stale_after_s=self.config.stale_after_s
        )
        if planned.stale:
            log.warning("stale state for %s (%.1fs old); planning proceeds", robot_id, age_s)
            self._emit_event({"type": "warning", "detail": f"stale state for {robot_id}"})

        issued_at = self.clock()
        envelope = package_command(
            planned,
            suggestion.user_selected,
            self.registry.ids(),
            self.counter,
            issued_at,
            teleop_key=teleop_key,
        )
        payload = encode_envelope(envelope)
        if self._client is None:
            raise InvalidSessionState("orchestrator is not started")
        # Prime the sequence map first so feedback racing the publish can
        # still be correlated; the log itself is appended only upon Ack.
        with self._lock:
            self._published_by_seq[envelope.sequence] = envelope
            self._sequence_session[envelope.sequence] = session.session_id
            session.dispatched_sequence = envelope.sequence
        self._client.publish(self.config.command_topic, payload)
        self._append_published(payload, envelope)
        log.info("Published command: %s", payload.decode("utf-8"))

        record = InteractionRecord(
            keywords=keywords,
            selected_context=chosen_text,
            top_context=top_context,
            final_command=planned.enriched_text,
            base_score=base_score,
            suggestion=suggestion,
            custom=custom,
            robot_id=robot_id,
            timestamp=issued_at,
            teleop_key=teleop_key.upper() if teleop_key else None,
            comment=comment,
        )
        snapshot = self.tracker.record_interaction(record)
        satisfaction = classify_satisfaction(record)

        with self._lock:
            session.record_index = snapshot.interactions - 1
            if envelope.sequence in self._acked_sequences:
                session.status = SessionStatus.ACKNOWLEDGED
            else:
                session.status = SessionStatus.DISPATCHED

        self._emit_event({"type": "published", "envelope": json.loads(payload)})
        self._emit_event({"type": "analytics", "snapshot": self.analytics()})
        self._emit_event({"type": "session", "session_id": session.session_id,
                          "status": session.status.value})
        return {
            "session_id": session.session_id,
            "status": session.status.value,
            "sequence": envelope.sequence,
            "envelope": json.loads(payload),
            "suggestion": {
                "suggested": suggestion.suggested.value,
                "reason": suggestion.reason.value,
                "user_selected": suggestion.user_selected.value,
                "overridden": suggestion.overridden,
            },
            "planned_command": planned.enriched_text,
            "base_score": base_score,
            "satisfaction": satisfaction.value,
        }

    def submit_comment(self, session_id: str, text: str) -> dict[str, Any]:
        session = self.get_session(session_id)
        if session.status not in (SessionStatus.DISPATCHED, SessionStatus.ACKNOWLEDGED):
            raise InvalidSessionState("comments apply to dispatched sessions")
        if text and session.record_index is not None:
            self.tracker.attach_comment(session.record_index, text)
        return {"session_id": session_id, "comment": text or None}

    def _append_published(self, payload: bytes, envelope: CommandEnvelope) -> None:
        with self._lock:
            self._published.append(payload)
            self._published_by_seq[envelope.sequence] = envelope
        path = self._path("published.jsonl")
        if path is not None:
            try:
                with path.open("ab") as fh:
                    fh.write(payload + b"\n")
            except OSError as exc:
                log.warning("published log write failed: %s", exc)

    # -- feedback loop ------------------------------------------------------

    def _feedback_loop(self) -> None:
        while not self._stop.is_set():
            try:
                payload = self._feedback_sub.get(timeout=0.2)
            except Exception:
                if self._client is None or not self._client.connected:
                    return
                continue
            try:
                fb = decode_feedback(payload)
            except MalformedMessage as exc:
                log.warning("dropping malformed feedback: %s", exc)
                continue
            self._handle_feedback(fb)

    def _handle_feedback(self, fb: FeedbackEnvelope) -> None:
        self.registry.update(fb.state_snapshot)
        with self._lock:
            self._feedback_log.append(fb)
            if fb.status is FeedbackStatus.RECEIVED:
                self._acked_sequences.add(fb.command_sequence)
                original = self._published_by_seq.get(fb.command_sequence)
                if original is not None:
                    self._received.setdefault(fb.robot_id, []).append(original)
                    self._append_received(fb.robot_id, original)
                for session in self._sessions.values():
                    if (
                        session.dispatched_sequence == fb.command_sequence
                        and session.status is SessionStatus.DISPATCHED
                    ):
                        session.status = SessionStatus.ACKNOWLEDGED
        if fb.status in (FeedbackStatus.COMPLETED, FeedbackStatus.FAILED):
            with self._feedback_cond:
                self._terminal[fb.command_sequence] = fb.status
                self._feedback_cond.notify_all()
        self._emit_event(
            {
                "type": "feedback",
                "robot_id": fb.robot_id,
                "command_sequence": fb.command_sequence,
                "status": fb.status.value,
                "detail": fb.detail,
                "state": encode_state(fb.state_snapshot),
            }
        )
        self._emit_event({"type": "robot_state", "state": encode_state(fb.state_snapshot)})

    def _append_received(self, robot_id: str, envelope: CommandEnvelope) -> None:
        path = self._path("received.jsonl")
        if path is None:
            return
        line = json.dumps(
            {"robot_id": robot_id, "envelope": json.loads(encode_envelope(envelope))},
            separators=(",", ":"),
            ensure_ascii=False,
        )
        try:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        except OSError as exc:
            log.warning("received log write failed: %s", exc)

    def wait_for_terminal(self, sequence: int, timeout_s: float = 30.0) -> FeedbackStatus:
        deadline = time.monotonic() + timeout_s
        with self._feedback_cond:
            while sequence not in self._terminal:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError(f"no terminal feedback for sequence {sequence}")
                self._feedback_cond.wait(remaining)
            return self._terminal[sequence]

    # -- reads --------------------------------------------------------------

    def published_log(self) -> list[bytes]:
        with self._lock:
            return list(self._published)

    def get_logs(self, kind: str) -> Any:
        if kind == "published":
            with self._lock:
                return [json.loads(p) for p in self._published]
        if kind == "received":
            with self._lock:
                return {
                    robot: [json.loads(encode_envelope(e)) for e in envs]
                    for robot, envs in self._received.items()
                }
        raise SwarmCmdError(f"unknown log kind: {kind}")

    def feedback_log(self) -> list[FeedbackEnvelope]:
        with self._lock:
            return list(self._feedback_log)

    def analytics(self) -> dict[str, Any]:
        snap = self.tracker.snapshot()
        return {
            "latest_scores": snap.latest_scores,
            "weights": snap.weights,
            "score_series": {m: list(v) for m, v in snap.score_series.items()},
            "modality_counts": snap.modality_counts,
            "satisfaction_tally": snap.satisfaction_tally,
            "interactions": snap.interactions,
        }

    def robots(self) -> list[dict[str, Any]]:
        return [encode_state(s) for s in self.registry.snapshot()]
