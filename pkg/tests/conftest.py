from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("suite", deadline=None, max_examples=100)
settings.load_profile("suite")

from swarmcmd.bus import Broker
from swarmcmd.config import load_config
from swarmcmd.contexts import ContextEngine
from swarmcmd.orchestrator import LogicalClock, Orchestrator
from swarmcmd.robot import RobotNode


@pytest.fixture(scope="session")
def config():
    return load_config()


@pytest.fixture(scope="session")
def engine(config):
    return ContextEngine(config)


@pytest.fixture
def broker():
    b = Broker("127.0.0.1", 0).start()
    yield b
    b.stop()


class Stack:
    """A broker, the three configured robots, and one orchestrator."""

    def __init__(self, config, data_dir, *, logical_clock=True, overrides=None):
        import dataclasses

        from swarmcmd.config import load_config as _load

        if overrides:
            config = _load(None, overrides=overrides)
        self.broker = Broker("127.0.0.1", 0).start()
        self.config = dataclasses.replace(config, broker_port=self.broker.port)
        self.robots = [
            RobotNode(
                spec.robot_id,
                "127.0.0.1",
                self.broker.port,
                motion=self.config.motion,
                command_topic=self.config.command_topic,
                feedback_topic=self.config.feedback_topic,
                start_pose=spec.start_pose,
                battery=spec.battery,
                received_log=(data_dir / f"robot-{i}.received.jsonl") if data_dir else None,
            ).start()
            for i, spec in enumerate(self.config.robots)
        ]
        clock = LogicalClock() if logical_clock else None
        self.orchestrator = Orchestrator(self.config, data_dir=data_dir, clock=clock).start()

    def close(self):
        self.orchestrator.close()
        for robot in self.robots:
            robot.stop()
        self.broker.stop()


@pytest.fixture
def stack(config, tmp_path):
    s = Stack(config, tmp_path / "data")
    yield s
    s.close()
