"""HTTP + event-stream surface over the orchestrator.

Request/response bodies use the same canonical JSON vocabulary as the wire
envelopes. /events is a websocket carrying the orchestrator's event feed;
inbound messages on it are ignored.
"""

from __future__ import annotations

import asyncio
import logging
import queue

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from .errors import (
    EmptyKeywords,
    InvalidSessionState,
    MissingTeleopKey,
    SwarmCmdError,
    UnknownRobot,
)
from .orchestrator import Orchestrator

log = logging.getLogger(__name__)


class KeywordsBody(BaseModel):
    text: str


class DispatchBody(BaseModel):
    robot_id: str
    candidate_index: int | None = None
    custom_text: str | None = None
    transcript: str | None = None  # Voice transcripts pass through as custom text
    modality: str | None = None
    teleop_key: str | None = None
    comment: str | None = None


class CommentBody(BaseModel):
    text: str


def create_app(orchestrator: Orchestrator) -> FastAPI:
    app = FastAPI(title="swarmcmd", version="0.1.0")

    def _session_or_404(session_id: str):
        try:
            return orchestrator.get_session(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")

    @app.post("/sessions")
    def create_session():
        session = orchestrator.create_session()
        return {"session_id": session.session_id, "status": session.status.value}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = _session_or_404(session_id)
        return {
            "session_id": session.session_id,
            "status": session.status.value,
            "keywords": list(session.keywords) if session.keywords else [],
            "dispatched_sequence": session.dispatched_sequence,
        }

    @app.post("/sessions/{session_id}/keywords")
    def submit_keywords(session_id: str, body: KeywordsBody):
        _session_or_404(session_id)
        try:
            return orchestrator.submit_keywords(session_id, body.text)
        except EmptyKeywords as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/sessions/{session_id}/dispatch")
    def dispatch(session_id: str, body: DispatchBody):
        _session_or_404(session_id)
        custom_text = body.custom_text
        if custom_text is None and body.transcript is not None:
            custom_text = body.transcript
        try:
            return orchestrator.dispatch(
                session_id,
                robot_id=body.robot_id,
                candidate_index=body.candidate_index,
                custom_text=custom_text,
                modality=body.modality,
                teleop_key=body.teleop_key,
                comment=body.comment,
            )
        except UnknownRobot as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except (MissingTeleopKey, EmptyKeywords) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except InvalidSessionState as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except SwarmCmdError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/sessions/{session_id}/comment")
    def submit_comment(session_id: str, body: CommentBody):
        _session_or_404(session_id)
        try:
            return orchestrator.submit_comment(session_id, body.text)
        except InvalidSessionState as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.get("/logs/published")
    def logs_published():
        return {"published": orchestrator.get_logs("published")}

    @app.get("/logs/received")
    def logs_received():
        return {"received": orchestrator.get_logs("received")}

    @app.get("/analytics")
    def analytics():
        return orchestrator.analytics()

    @app.get("/robots")
    def robots():
        return {"robots": orchestrator.robots()}

    @app.websocket("/events")
    async def events(ws: WebSocket, session_id: str | None = None):
        await ws.accept()
        q = orchestrator.subscribe_events()
        loop = asyncio.get_running_loop()

        async def drain_inbound():
            try:
                while True:
                    await ws.receive_text()  # inbound messages are ignored
            except WebSocketDisconnect:
                pass

        inbound = asyncio.ensure_future(drain_inbound())
        try:
            while True:
                try:
                    event = await loop.run_in_executor(None, q.get, True, 0.5)
                except queue.Empty:
                    if inbound.done():
                        break
                    continue
                if session_id and not orchestrator.event_matches_session(event, session_id):
                    continue
                await ws.send_json(event)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            inbound.cancel()
            orchestrator.unsubscribe_events(q)

    return app
