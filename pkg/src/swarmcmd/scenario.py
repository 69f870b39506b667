"""Headless scenario execution and the module performance report.

A scenario file is JSON lines, one step per line:

    {"keywords": "patrol area", "select": 1, "modality": "Teleop",
     "teleop_key": "P", "robot": "TurtleBot 1", "comment": "..."}

`select` picks a generated candidate by its index; `custom` sends free text
instead. An optional leading {"config_overrides": {...}} line tunes the run
(the bundled golden scenario pins its learning constants there). The runner
boots a broker, the configured robots, and an orchestrator in-process, drives
the steps, waits for terminal feedback after each dispatch, and renders the
module performance table.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .analytics import ModuleId, classify_satisfaction, compute_bonus
from .bus import Broker
from .config import AppConfig, load_config
from .contexts import SCORE_FLOOR, SCORE_SPAN
from .domain import Modality
from .errors import SwarmCmdError, UndefinedSimilarity
from .orchestrator import LogicalClock, Orchestrator
from .pipeline import recognize_intent
from .robot import RobotNode

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("LLM", "Context", "Score", "Sug.", "User", "Sat.", "Decision", "Com.")


class ScenarioError(SwarmCmdError):
    def __init__(self, step_index: int, cause: Exception | str):
        super().__init__(f"step {step_index}: {cause}")
        self.step_index = step_index


@dataclass(frozen=True)
class ScenarioStep:
    keywords: str
    robot: str
    select: int | None = None
    custom: str | None = None
    modality: str | None = None
    teleop_key: str | None = None
    comment: str | None = None


def load_scenario(path: str | Path) -> tuple[dict[str, Any], list[ScenarioStep]]:
    overrides: dict[str, Any] = {}
    steps: list[ScenarioStep] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        obj = json.loads(line)
        if "config_overrides" in obj:
            overrides.update(obj["config_overrides"])
            continue
        try:
            steps.append(
                ScenarioStep(
                    keywords=obj["keywords"],
                    robot=obj["robot"],
                    select=obj.get("select"),
                    custom=obj.get("custom"),
                    modality=obj.get("modality"),
                    teleop_key=obj.get("teleop_key"),
                    comment=obj.get("comment"),
                )
            )
        except KeyError as exc:
            raise ScenarioError(lineno, f"missing field {exc}")
    return overrides, steps


def _clamp01(value: float) -> float:
    return max(0.0, min(1.0, value))


def build_report(orchestrator: Orchestrator) -> dict[str, Any]:
    """Per-module rows for every recorded interaction.

    Each module's Score column reports the quantity that reflects that
    module's own decision: TP and IR show the bonus-adjusted command score,
    MS shows its blended learning score, and CG scores the user's chosen
    context against the generator's top-ranked candidate.
    """
    records = orchestrator.tracker.records()
    stopwords = orchestrator.config.stopwords
    engine = orchestrator.engine
    ms_series = orchestrator.tracker.state(ModuleId.MS).score_history
    rows: list[dict[str, Any]] = []
    for i, rec in enumerate(records):
        tp_score = _clamp01(rec.base_score + compute_bonus(ModuleId.TP, rec, stopwords))
        ir_score = _clamp01(rec.base_score + compute_bonus(ModuleId.IR, rec, stopwords))
        ms_score = ms_series[i]
        try:
            cg_similarity = engine.similarity(
                engine.context_tokens(rec.selected_context),
                engine.context_tokens(rec.top_context),
            )
        except UndefinedSimilarity:
            cg_similarity = 0.0
        cg_score = SCORE_FLOOR + SCORE_SPAN * cg_similarity
        user = rec.suggestion.user_selected.value
        if rec.teleop_key:
            user = f"{user} ({rec.teleop_key})"
        satisfaction = classify_satisfaction(rec).value
        decisions = {
            "TP": f'Execute "{rec.selected_context}"',
            "IR": recognize_intent(rec.keywords).display,
            "MS": rec.suggestion.user_selected.value,
            "CG": rec.top_context,
        }
        scores = {"TP": tp_score, "IR": ir_score, "MS": ms_score, "CG": cg_score}
        for module in ("TP", "IR", "MS", "CG"):
            rows.append(
                {
                    "module": module,
                    "interaction": i + 1,
                    "context": rec.selected_context,
                    "score": round(scores[module], 4),
                    "suggested": rec.suggestion.suggested.value,
                    "user": user,
                    "satisfaction": satisfaction,
                    "decision": decisions[module],
                    "comment": rec.comment or "",
                }
            )
    snapshot = orchestrator.analytics()
    return {
        "rows": rows,
        "interactions": len(records),
        "modality_counts": snapshot["modality_counts"],
        "satisfaction_tally": snapshot["satisfaction_tally"],
        "score_series": snapshot["score_series"],
        "published": len(orchestrator.published_log()),
    }


def render_report(report: dict[str, Any]) -> str:
    rows = report["rows"]
    if not rows:
        return "(empty scenario: no interactions)\n"
    # Group rows by module, table-style.
    by_module: dict[str, list[dict[str, Any]]] = {}
    for row in rows:
        by_module.setdefault(row["module"], []).append(row)
    table: list[tuple[str, ...]] = [REPORT_COLUMNS]
    for module in ("TP", "IR", "MS", "CG"):
        for row in by_module.get(module, ()):
            table.append(
                (
                    module,
                    row["context"],
                    f"{row['score']:.2f}",
                    row["suggested"],
                    row["user"],
                    row["satisfaction"],
                    row["decision"],
                    row["comment"],
                )
            )
    widths = [max(len(r[c]) for r in table) for c in range(len(REPORT_COLUMNS))]
    lines = []
    for idx, row in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * widths[c] for c in range(len(widths))))
    counts = report["modality_counts"]
    lines.append("")
    lines.append(
        "modalities: "
        + ", ".join(f"{m}={counts[m]}" for m in ("Text", "Voice", "Teleop"))
    )
    tally = report["satisfaction_tally"]
    lines.append(
        "satisfaction: "
        + ", ".join(f"{level}={n}" for level, n in tally.items() if n)
    )
    return "\n".join(lines) + "\n"


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name)


class ScenarioRunner:
    """Owns a fully wired in-process stack for one scenario run."""

    def __init__(self, config: AppConfig, data_dir: str | Path | None = None):
        self.config = config
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.broker: Broker | None = None
        self.robots: list[RobotNode] = []
        self.orchestrator: Orchestrator | None = None

    def __enter__(self) -> "ScenarioRunner":
        self.broker = Broker(self.config.broker_host, 0).start()
        config = dataclasses.replace(self.config, broker_port=self.broker.port)
        self.config = config
        for spec in config.robots:
            received_log = None
            if self.data_dir is not None:
                received_log = self.data_dir / f"{_slug(spec.robot_id)}.received.jsonl"
                received_log.parent.mkdir(parents=True, exist_ok=True)
            node = RobotNode(
                spec.robot_id,
                config.broker_host,
                config.broker_port,
                motion=config.motion,
                command_topic=config.command_topic,
                feedback_topic=config.feedback_topic,
                start_pose=spec.start_pose,
                battery=spec.battery,
                received_log=received_log,
            ).start()
            self.robots.append(node)
        self.orchestrator = Orchestrator(
            config, data_dir=self.data_dir, clock=LogicalClock()
        ).start()
        return self

    def __exit__(self, *exc_info) -> None:
        if self.orchestrator is not None:
            self.orchestrator.close()
        for node in self.robots:
            node.stop()
        if self.broker is not None:
            self.broker.stop()

    def run(self, steps: list[ScenarioStep], *, step_timeout_s: float = 20.0) -> dict[str, Any]:
        assert self.orchestrator is not None
        orch = self.orchestrator
        session = orch.create_session()
        for index, step in enumerate(steps, 1):
            try:
                orch.submit_keywords(session.session_id, step.keywords)
                result = orch.dispatch(
                    session.session_id,
                    robot_id=step.robot,
                    candidate_index=step.select,
                    custom_text=step.custom,
                    modality=step.modality,
                    teleop_key=step.teleop_key,
                    comment=step.comment,
                )
                orch.wait_for_terminal(result["sequence"], timeout_s=step_timeout_s)
            except ScenarioError:
                raise
            except Exception as exc:
                raise ScenarioError(index, exc) from exc
        return build_report(orch)


def bundled_scenario_path(name: str = "table1.scenario") -> Path:
    from importlib import resources

    return Path(str(resources.files("swarmcmd.data").joinpath(name)))


def run_scenario_file(
    path: str | Path,
    *,
    config_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
    data_dir: str | Path | None = None,
) -> tuple[int, dict[str, Any] | None, str]:
    """Execute a scenario file. Returns (exit_code, report, rendered_text)."""
    try:
        file_overrides, steps = load_scenario(path)
    except (OSError, ValueError, ScenarioError) as exc:
        return 1, None, f"scenario load failed: {exc}\n"
    merged: dict[str, Any] = {}
    for layer in (file_overrides, overrides or {}):
        for key, value in layer.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = value
    config = load_config(config_path, overrides=merged)
    try:
        with ScenarioRunner(config, data_dir=data_dir) as runner:
            report = runner.run(steps)
    except ScenarioError as exc:
        return 1, None, f"{exc}\n"
    return 0, report, render_report(report)
