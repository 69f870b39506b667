#!/usr/bin/env python3
"""Record console fixtures by driving the live HTTP API.

Boots the full stack (broker, robots, orchestrator, HTTP server) on ephemeral
ports, replays the bundled golden scenario through real HTTP requests, and
snapshots every response the console consumes into frontend/fixtures/. Run
from the repository root:

    python3 frontend/tools/record_fixtures.py
"""

from __future__ import annotations

import json
import socket
import threading
import time
import urllib.request
from pathlib import Path

import uvicorn

from swarmcmd.bus import Broker
from swarmcmd.config import load_config
from swarmcmd.orchestrator import LogicalClock, Orchestrator
from swarmcmd.robot import RobotNode
from swarmcmd.server import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

STEPS = [
    {"keywords": "patrol area", "select": 1, "modality": "Teleop",
     "teleop_key": "P", "robot": "TurtleBot 1"},
    {"keywords": "patrol zone", "custom": "Patrol zone", "modality": "Teleop",
     "teleop_key": "F", "robot": "TurtleBot 2"},
    {"keywords": "move forward", "custom": "run right", "modality": "Voice",
     "robot": "TurtleBot 3", "comment": "good"},
    {"keywords": "patrol perimeter", "custom": "Patrol perimeter", "modality": "Text",
     "robot": "TurtleBot 1"},
]


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def http(method: str, url: str, body: dict | None = None) -> dict:
    data = json.dumps(body).encode() if body is not None else None
    request = urllib.request.Request(
        url, data=data, method=method, headers={"Content-Type": "application/json"}
    )
    with urllib.request.urlopen(request, timeout=10) as response:
        return json.loads(response.read())


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    # The golden scenario's learning constants, same as table1.scenario.
    config = load_config(overrides={"learning": {"initial_weight": 1.0, "learning_rate": 0.1}})

    broker = Broker("127.0.0.1", 0).start()
    import dataclasses

    config = dataclasses.replace(config, broker_port=broker.port)
    robots = [
        RobotNode(
            spec.robot_id, "127.0.0.1", broker.port,
            motion=config.motion,
            command_topic=config.command_topic,
            feedback_topic=config.feedback_topic,
            start_pose=spec.start_pose,
            battery=spec.battery,
        ).start()
        for spec in config.robots
    ]
    orchestrator = Orchestrator(config, clock=LogicalClock()).start()
    events = orchestrator.subscribe_events()

    port = free_port()
    server = uvicorn.Server(
        uvicorn.Config(create_app(orchestrator), host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            http("GET", f"{base}/analytics")
            break
        except Exception:
            time.sleep(0.05)

    try:
        session = http("POST", f"{base}/sessions")
        session_id = session["session_id"]
        keywords_responses = []
        dispatch_responses = []
        for step in STEPS:
            keywords_responses.append(
                http("POST", f"{base}/sessions/{session_id}/keywords", {"text": step["keywords"]})
            )
            payload = {"robot_id": step["robot"], "modality": step["modality"]}
            if "select" in step:
                payload["candidate_index"] = step["select"]
            if "custom" in step:
                payload["custom_text"] = step["custom"]
            if "teleop_key" in step:
                payload["teleop_key"] = step["teleop_key"]
            if "comment" in step:
                payload["comment"] = step["comment"]
            result = http("POST", f"{base}/sessions/{session_id}/dispatch", payload)
            dispatch_responses.append(result)
            orchestrator.wait_for_terminal(result["sequence"], timeout_s=20)
        time.sleep(0.3)  # let the final Received entries and events settle

        (FIXTURES / "keywords_response.json").write_text(
            json.dumps(keywords_responses[0], indent=2) + "\n"
        )
        (FIXTURES / "keywords_responses.json").write_text(
            json.dumps(keywords_responses, indent=2) + "\n"
        )
        (FIXTURES / "dispatch_response.json").write_text(
            json.dumps(dispatch_responses[0], indent=2) + "\n"
        )
        (FIXTURES / "dispatch_responses.json").write_text(
            json.dumps(dispatch_responses, indent=2) + "\n"
        )
        (FIXTURES / "analytics_table1.json").write_text(
            json.dumps(http("GET", f"{base}/analytics"), indent=2) + "\n"
        )
        (FIXTURES / "logs_published.json").write_text(
            json.dumps(http("GET", f"{base}/logs/published"), indent=2) + "\n"
        )
        (FIXTURES / "logs_received.json").write_text(
            json.dumps(http("GET", f"{base}/logs/received"), indent=2) + "\n"
        )
        (FIXTURES / "robots.json").write_text(
            json.dumps(http("GET", f"{base}/robots"), indent=2) + "\n"
        )
        collected = []
        while True:
            try:
                collected.append(events.get_nowait())
            except Exception:
                break
        (FIXTURES / "events.jsonl").write_text(
            "\n".join(json.dumps(e) for e in collected) + "\n"
        )
        print(f"recorded {len(collected)} events and 8 fixture files into {FIXTURES}")
    finally:
        server.should_exit = True
        thread.join(timeout=5)
        orchestrator.close()
        for node in robots:
            node.stop()
        broker.stop()


if __name__ == "__main__":
    main()
