"""Command-line entry points: service, broker, and robot node."""

from __future__ import annotations

import argparse
import logging
import sys

from .bus import Broker
from .config import load_config


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def broker_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="swarmcmd-broker", description="Run the message broker.")
    parser.add_argument("--bind", default=None, help="host:port to listen on")
    parser.add_argument("--log-level", default="info")
    args = parser.parse_args(argv)
    _setup_logging(args.log_level)
    config = load_config()
    host, port = config.broker_host, config.broker_port
    if args.bind:
        host, _, port_text = args.bind.rpartition(":")
        host = host or "127.0.0.1"
        port = int(port_text)
    Broker(host, port).serve_forever()
    return 0


def robot_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="swarmcmd-robot", description="Run one simulated robot.")
    parser.add_argument("--id", required=True, help='robot identifier, e.g. "TurtleBot 1"')
    parser.add_argument("--broker", default=None, help="host:port of the broker")
    parser.add_argument("--start-pose", default="0,0,0", help="x,y,heading")
    parser.add_argument("--battery", type=float, default=100.0)
    parser.add_argument("--received-log", default=None, help="path for the received-commands log")
    parser.add_argument("--config", default=None)
    parser.add_argument("--log-level", default="info")
    args = parser.parse_args(argv)
    _setup_logging(args.log_level)
    config = load_config(args.config)
    host, port = config.broker_host, config.broker_port
    if args.broker:
        host, _, port_text = args.broker.rpartition(":")
        host = host or "127.0.0.1"
        port = int(port_text)
    pose = tuple(float(v) for v in args.start_pose.split(","))
    if len(pose) != 3:
        parser.error("--start-pose must be x,y,heading")

    from .robot import RobotNode

    node = RobotNode(
        args.id,
        host,
        port,
        motion=config.motion,
        command_topic=config.command_topic,
        feedback_topic=config.feedback_topic,
        start_pose=pose,  # type: ignore[arg-type]
        battery=args.battery,
        received_log=args.received_log,
    ).start()
    try:
        import threading

        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        node.stop()
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="swarmcmd", description="Swarm command and control.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default="info")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", parents=[common], help="Run the orchestrator HTTP service.")
    serve.add_argument("--broker", default=None, help="host:port of the broker")
    serve.add_argument("--config", default=None)
    serve.add_argument("--data-dir", default=None)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    run = sub.add_parser(
        "run-scenario", parents=[common], help="Execute a scenario file headlessly."
    )
    run.add_argument("script", help="JSON-lines scenario file")
    run.add_argument("--config", default=None)
    run.add_argument("--data-dir", default=None)
    run.add_argument("--json", action="store_true", help="print the report as JSON")

    args = parser.parse_args(argv)
    _setup_logging(args.log_level)

    if args.command == "serve":
        from .orchestrator import Orchestrator
        from .server import create_app

        overrides = None
        if args.broker:
            host, _, port_text = args.broker.rpartition(":")
            overrides = {"broker": {"host": host or "127.0.0.1", "port": int(port_text)}}
        config = load_config(args.config, overrides=overrides)
        orchestrator = Orchestrator(config, data_dir=args.data_dir).start()
        try:
            import uvicorn

            from . import server as _server  # noqa: F401

            uvicorn.run(
                create_app(orchestrator),
                host=args.host,
                port=args.port,
                log_level=args.log_level,
            )
        finally:
            orchestrator.close()
        return 0

    if args.command == "run-scenario":
        import json as _json

        from .scenario import run_scenario_file

        code, report, text = run_scenario_file(
            args.script, config_path=args.config, data_dir=args.data_dir
        )
        if args.json and report is not None:
            print(_json.dumps(report, indent=2))
        else:
            print(text, end="")
        return code

    return 2


if __name__ == "__main__":
    sys.exit(main())
