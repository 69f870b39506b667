from __future__ import annotations

import json
import time

import pytest

from swarmcmd.domain import FeedbackStatus, Modality, decode_envelope
from swarmcmd.errors import (
    EmptyKeywords,
    InvalidSessionState,
    MissingTeleopKey,
    SwarmCmdError,
    UnknownRobot,
)
from swarmcmd.orchestrator import Orchestrator, SessionStatus


def submit(stack, text="patrol area"):
    orch = stack.orchestrator
    session = orch.create_session()
    result = orch.submit_keywords(session.session_id, text)
    return session, result


class TestSubmitKeywords:
    def test_four_scored_candidates_with_intent(self, stack):
        _, result = submit(stack, "move forward patrol")
        assert len(result["candidates"]) == 4
        assert all(0.6 <= c["score"] <= 1.0 for c in result["candidates"])
        assert result["intent"] == "Patrol mode activated."

    def test_navigation_intent(self, stack):
        _, result = submit(stack, "go")
        assert result["intent"] == "Navigation mode activated."

    def test_empty_keywords_rejected(self, stack):
        session = stack.orchestrator.create_session()
        with pytest.raises(EmptyKeywords):
            stack.orchestrator.submit_keywords(session.session_id, "")

    def test_per_candidate_suggestions(self, stack):
        _, result = submit(stack, "patrol area")
        top = result["candidates"][0]
        assert top["text"] == "Patrol area"
        assert top["suggested_modality"] == "Teleop"

    def test_resubmit_reenters_drafting_then_suggested(self, stack):
        session, _ = submit(stack, "patrol area")
        assert session.status is SessionStatus.SUGGESTED
        stack.orchestrator.submit_keywords(session.session_id, "go")
        assert session.status is SessionStatus.SUGGESTED
        assert session.keywords.tokens == ("go",)


class TestDispatch:
    def test_candidate_dispatch_very_high(self, stack):
        session, result = submit(stack, "patrol area")
        out = stack.orchestrator.dispatch(
            session.session_id,
            robot_id="TurtleBot 1",
            candidate_index=1,
            modality="Teleop",
            teleop_key="P",
        )
        assert out["satisfaction"] == "Very High"
        assert out["envelope"]["target"] == "TurtleBot 1"
        assert out["envelope"]["command"].endswith(" P")
        assert session.status in (SessionStatus.DISPATCHED, SessionStatus.ACKNOWLEDGED)
        stack.orchestrator.wait_for_terminal(out["sequence"], timeout_s=10)

    def test_custom_dispatch_medium_with_comment(self, stack):
        session, _ = submit(stack, "move forward")
        out = stack.orchestrator.dispatch(
            session.session_id,
            robot_id="TurtleBot 3",
            custom_text="run right",
            modality="Voice",
            comment="good",
        )
        assert out["satisfaction"] == "Medium"
        assert out["base_score"] == 0.6
        assert out["suggestion"] == {
            "suggested": "Voice",
            "reason": "Default",
            "user_selected": "Voice",
            "overridden": False,
        }
        records = stack.orchestrator.tracker.records()
        assert records[-1].comment == "good"
        stack.orchestrator.wait_for_terminal(out["sequence"], timeout_s=10)

    def test_teleop_without_key(self, stack):
        session, _ = submit(stack)
        with pytest.raises(MissingTeleopKey):
            stack.orchestrator.dispatch(
                session.session_id,
                robot_id="TurtleBot 1",
                candidate_index=1,
                modality="Teleop",
            )

    def test_unknown_robot(self, stack):
        session, _ = submit(stack)
        with pytest.raises(UnknownRobot):
            stack.orchestrator.dispatch(
                session.session_id,
                robot_id="TurtleBot 9",
                candidate_index=1,
                modality="Text",
            )

    def test_dispatch_requires_suggested_state(self, stack):
        session = stack.orchestrator.create_session()
        with pytest.raises(InvalidSessionState):
            stack.orchestrator.dispatch(
                session.session_id, robot_id="TurtleBot 1", candidate_index=1, modality="Text"
            )

    def test_exactly_one_choice_required(self, stack):
        session, _ = submit(stack)
        with pytest.raises(SwarmCmdError):
            stack.orchestrator.dispatch(
                session.session_id,
                robot_id="TurtleBot 1",
                candidate_index=1,
                custom_text="both",
                modality="Text",
            )

    def test_accepting_suggestion_by_omitting_modality(self, stack):
        session, result = submit(stack, "patrol area")
        out = stack.orchestrator.dispatch(
            session.session_id, robot_id="TurtleBot 2", candidate_index=1, teleop_key="F"
        )
        assert out["suggestion"]["user_selected"] == "Teleop"
        assert not out["suggestion"]["overridden"]
        stack.orchestrator.wait_for_terminal(out["sequence"], timeout_s=10)

    def test_override_flag_set(self, stack):
        session, _ = submit(stack, "patrol area")
        out = stack.orchestrator.dispatch(
            session.session_id, robot_id="TurtleBot 1", candidate_index=1, modality="Text"
        )
        assert out["suggestion"]["overridden"] is True
        assert out["satisfaction"] == "Medium"  # only the score criterion holds
        stack.orchestrator.wait_for_terminal(out["sequence"], timeout_s=10)


class TestFeedbackLoop:
    def test_session_acknowledged_and_logs_consistent(self, stack):
        session, _ = submit(stack, "patrol area")
        out = stack.orchestrator.dispatch(
            session.session_id,
            robot_id="TurtleBot 1",
            candidate_index=1,
            modality="Teleop",
            teleop_key="P",
        )
        assert stack.orchestrator.wait_for_terminal(out["sequence"], 10) is FeedbackStatus.COMPLETED
        deadline = time.monotonic() + 5
        while session.status is not SessionStatus.ACKNOWLEDGED and time.monotonic() < deadline:
            time.sleep(0.01)
        assert session.status is SessionStatus.ACKNOWLEDGED
        published = stack.orchestrator.get_logs("published")
        received = stack.orchestrator.get_logs("received")
        assert len(published) == 1
        assert received["TurtleBot 1"][0]["sequence"] == out["sequence"]

    def test_feedback_statuses_in_order(self, stack):
        session, _ = submit(stack, "move forward")
        out = stack.orchestrator.dispatch(
            session.session_id, robot_id="TurtleBot 2", candidate_index=2, modality="Text"
        )
        stack.orchestrator.wait_for_terminal(out["sequence"], 10)
        statuses = [
            f.status for f in stack.orchestrator.feedback_log()
            if f.command_sequence == out["sequence"]
        ]
        assert statuses == [
            FeedbackStatus.RECEIVED,
            FeedbackStatus.EXECUTING,
            FeedbackStatus.COMPLETED,
        ]

    def test_robot_state_updated_from_feedback(self, stack):
        session, _ = submit(stack, "move forward")
        before, _ = stack.orchestrator.registry.latest("TurtleBot 1")
        out = stack.orchestrator.dispatch(
            session.session_id, robot_id="TurtleBot 1", candidate_index=2, modality="Text"
        )
        stack.orchestrator.wait_for_terminal(out["sequence"], 10)
        time.sleep(0.05)
        after, age = stack.orchestrator.registry.latest("TurtleBot 1")
        assert after.battery < before.battery
        assert after.x != before.x


class TestComments:
    def test_comment_attached_and_last_write_wins(self, stack):
        session, _ = submit(stack, "move forward")
        out = stack.orchestrator.dispatch(
            session.session_id, robot_id="TurtleBot 1", candidate_index=2, modality="Text"
        )
        stack.orchestrator.submit_comment(session.session_id, "first")
        stack.orchestrator.submit_comment(session.session_id, "good")
        assert stack.orchestrator.tracker.records()[-1].comment == "good"
        stack.orchestrator.wait_for_terminal(out["sequence"], 10)

    def test_empty_comment_noop(self, stack):
        session, _ = submit(stack, "move forward")
        stack.orchestrator.dispatch(
            session.session_id, robot_id="TurtleBot 1", candidate_index=2, modality="Text"
        )
        stack.orchestrator.submit_comment(session.session_id, "")
        assert stack.orchestrator.tracker.records()[-1].comment is None

    def test_comment_requires_dispatched(self, stack):
        session, _ = submit(stack)
        with pytest.raises(InvalidSessionState):
            stack.orchestrator.submit_comment(session.session_id, "early")


class TestAnalyticsAndEvents:
    def test_modality_counts_match_dispatches(self, stack):
        orch = stack.orchestrator
        for modality, robot in (("Text", "TurtleBot 1"), ("Voice", "TurtleBot 2")):
            session, _ = submit(stack, "move forward")
            out = orch.dispatch(
                session.session_id, robot_id=robot, candidate_index=2, modality=modality
            )
            orch.wait_for_terminal(out["sequence"], 10)
        snapshot = orch.analytics()
        assert snapshot["interactions"] == 2
        assert sum(snapshot["modality_counts"].values()) == 2
        assert all(len(s) == 2 for s in snapshot["score_series"].values())

    def test_event_stream_carries_lifecycle(self, stack):
        orch = stack.orchestrator
        events = orch.subscribe_events()
        session, _ = submit(stack, "patrol area")
        out = orch.dispatch(
            session.session_id, robot_id="TurtleBot 1", candidate_index=1,
            modality="Teleop", teleop_key="P",
        )
        orch.wait_for_terminal(out["sequence"], 10)
        seen = set()
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline and not {"published", "feedback", "analytics"} <= seen:
            try:
                seen.add(events.get(timeout=0.2)["type"])
            except Exception:
                continue
        orch.unsubscribe_events(events)
        assert {"published", "feedback", "analytics", "session"} <= seen


class TestPersistence:
    def test_restart_restores_state(self, config, tmp_path):
        from conftest import Stack

        data_dir = tmp_path / "data"
        stack = Stack(config, data_dir)
        try:
            session, _ = submit(stack, "patrol area")
            out = stack.orchestrator.dispatch(
                session.session_id, robot_id="TurtleBot 1", candidate_index=1,
                modality="Teleop", teleop_key="P",
            )
            stack.orchestrator.wait_for_terminal(out["sequence"], 10)
            time.sleep(0.1)
            before = stack.orchestrator.analytics()
            published_before = stack.orchestrator.published_log()
        finally:
            stack.close()

        stack2 = Stack(config, data_dir)
        try:
            restored = stack2.orchestrator.analytics()
            assert restored["score_series"] == before["score_series"]
            assert restored["modality_counts"] == before["modality_counts"]
            assert stack2.orchestrator.published_log() == published_before
            # the sequence counter continues past what was restored
            session, _ = submit(stack2, "move forward")
            out = stack2.orchestrator.dispatch(
                session.session_id, robot_id="TurtleBot 1", candidate_index=2, modality="Text"
            )
            assert out["sequence"] == 2
            stack2.orchestrator.wait_for_terminal(out["sequence"], 10)
        finally:
            stack2.close()

    def test_robot_received_log_matches_published(self, stack):
        session, _ = submit(stack, "patrol area")
        out = stack.orchestrator.dispatch(
            session.session_id, robot_id="TurtleBot 1", candidate_index=1,
            modality="Teleop", teleop_key="P",
        )
        stack.orchestrator.wait_for_terminal(out["sequence"], 10)
        log_file = stack.robots[0]._received_log
        lines = [l for l in log_file.read_bytes().splitlines() if l.strip()]
        assert [decode_envelope(l).sequence for l in lines] == [out["sequence"]]
        published = {e["sequence"] for e in stack.orchestrator.get_logs("published")}
        assert {decode_envelope(l).sequence for l in lines} <= published
