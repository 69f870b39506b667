"""Configuration loading.

Defaults ship as package data (`data/default_config.json`, `data/stopwords.txt`);
a user config file is deep-merged over them. All tunables referenced elsewhere
(template tables, synonym rules, learning constants, motion limits, broker
address, robot registry) live here so runs are reproducible from one file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

_DATA_PACKAGE = "swarmcmd.data"


def _package_text(name: str) -> str:
    return resources.files(_DATA_PACKAGE).joinpath(name).read_text(encoding="utf-8")


def _deep_merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


@dataclass(frozen=True)
class SynonymRule:
    canonical: str
    weight: float


@dataclass(frozen=True)
class TemplateTables:
    actions: tuple[str, ...]
    directions: tuple[str, ...]
    lateral_directions: tuple[str, ...]
    tasks: tuple[str, ...]
    default_action: str
    default_object: str
    default_direction: str


@dataclass(frozen=True)
class RobotSpec:
    robot_id: str
    start_pose: tuple[float, float, float]
    battery: float


@dataclass(frozen=True)
class MotionConfig:
    dt_s: float
    linear_speed: float
    angular_speed: float
    move_duration_s: float
    max_linear: float
    max_angular: float
    battery_drain_per_s: float


@dataclass(frozen=True)
class AppConfig:
    broker_host: str
    broker_port: int
    command_topic: str
    feedback_topic: str
    robots: tuple[RobotSpec, ...]
    templates: TemplateTables
    stopwords: frozenset[str]
    synonyms_enabled: bool
    synonyms: dict[str, SynonymRule]
    external_endpoint: str | None
    external_timeout_s: float
    learning_rate: float
    initial_weight: float
    stale_after_s: float
    motion: MotionConfig
    raw: dict[str, Any] = field(repr=False, default_factory=dict)

    def robot_ids(self) -> tuple[str, ...]:
        return tuple(r.robot_id for r in self.robots)


def default_config_dict() -> dict[str, Any]:
    return json.loads(_package_text("default_config.json"))


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        text = _package_text("stopwords.txt")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def _build(raw: dict[str, Any]) -> AppConfig:
    broker = raw["broker"]
    topics = raw["topics"]
    tmpl = raw["templates"]
    syn = raw["synonyms"]
    ext = raw["external_provider"]
    learn = raw["learning"]
    motion = raw["motion"]
    robots = tuple(
        RobotSpec(r["id"], tuple(float(v) for v in r["start_pose"]), float(r["battery"]))
        for r in raw["robots"]
    )
    stopwords = load_stopwords(raw.get("stopwords_file"))
    synonyms = {
        token: SynonymRule(rule["canonical"], float(rule["weight"]))
        for token, rule in syn.get("table", {}).items()
    }
    return AppConfig(
        broker_host=broker["host"],
        broker_port=int(broker["port"]),
        command_topic=topics["commands"],
        feedback_topic=topics["feedback"],
        robots=robots,
        templates=TemplateTables(
            actions=tuple(tmpl["actions"]),
            directions=tuple(tmpl["directions"]),
            lateral_directions=tuple(tmpl["lateral_directions"]),
            tasks=tuple(tmpl["tasks"]),
            default_action=tmpl["default_action"],
            default_object=tmpl["default_object"],
            default_direction=tmpl["default_direction"],
        ),
        stopwords=stopwords,
        synonyms_enabled=bool(syn.get("enabled", False)),
        synonyms=synonyms,
        external_endpoint=ext.get("endpoint"),
        external_timeout_s=float(ext.get("timeout_s", 2.0)),
        learning_rate=float(learn["learning_rate"]),
        initial_weight=float(learn["initial_weight"]),
        stale_after_s=float(raw["planner"]["stale_after_s"]),
        motion=MotionConfig(
            dt_s=float(motion["dt_s"]),
            linear_speed=float(motion["linear_speed"]),
            angular_speed=float(motion["angular_speed"]),
            move_duration_s=float(motion["move_duration_s"]),
            max_linear=float(motion["max_linear"]),
            max_angular=float(motion["max_angular"]),
            battery_drain_per_s=float(motion["battery_drain_per_s"]),
        ),
        raw=raw,
    )


def load_config(
    path: str | Path | None = None, overrides: dict[str, Any] | None = None
) -> AppConfig:
    """Defaults <- optional config file <- optional override dict."""
    raw = default_config_dict()
    if path is not None:
        raw = _deep_merge(raw, json.loads(Path(path).read_text(encoding="utf-8")))
    if overrides:
        raw = _deep_merge(raw, overrides)
    return _build(raw)
