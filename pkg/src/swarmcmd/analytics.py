"""Online learning analytics for the four decision modules.

Each dispatched command becomes an InteractionRecord. For every module (task
planning TP, intent recognition IR, modality selection MS, context generation
CG) the tracker computes a keyword/agreement bonus, blends it with the
module's weight into a score, and nudges the weight toward that score. Scores
are clamped to [0, 1]; weights stay in [0, 1]. Histories are append-only and
feed the score charts; modality counts and a satisfaction tally round out the
snapshot served to the console.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from .contexts import SCORE_FLOOR
from .domain import KeywordSet, Modality, filter_stopwords, tokenize
from .errors import EmptyKeywords, UndefinedSimilarity
from .pipeline import ModalitySuggestion, SuggestionReason, strip_enrichment, suggest_modality

log = logging.getLogger(__name__)

TP_BONUS_TOKENS = frozenset({"go", "execute"})
IR_BONUS_TOKEN = "patrol"
TP_BONUS = 0.1
IR_BONUS = 0.15
MS_MATCH_BONUS = 0.1
MS_MISMATCH_PENALTY = -0.05
CG_ALIGN_FACTOR = 0.1


class ModuleId(str, Enum):
    TP = "TP"
    IR = "IR"
    MS = "MS"
    CG = "CG"


class SatisfactionLevel(Enum):
    VERY_HIGH = "Very High"
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"

    @classmethod
    def from_count(cls, c: int) -> "SatisfactionLevel":
        return {3: cls.VERY_HIGH, 2: cls.HIGH, 1: cls.MEDIUM, 0: cls.LOW}[c]


@dataclass(frozen=True)
class InteractionRecord:
    keywords: KeywordSet
    selected_context: str  # the text the user chose (candidate or custom)
    top_context: str  # highest-ranked generated candidate at dispatch time
    final_command: str  # enriched text actually sent (teleop key excluded)
    base_score: float
    suggestion: ModalitySuggestion
    custom: bool
    robot_id: str
    timestamp: int
    teleop_key: str | None = None
    comment: str | None = None

    def __post_init__(self):
        if not SCORE_FLOOR - 1e-9 <= self.base_score <= 1.0 + 1e-9:
            raise ValueError(f"base score out of band: {self.base_score}")
        if self.teleop_key is not None and self.suggestion.user_selected is not Modality.TELEOP:
            raise ValueError("teleop key present for a non-Teleop dispatch")


@dataclass
class ModuleLearningState:
    module: ModuleId
    weight: float
    learning_rate: float = 0.1
    score_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight out of range: {self.weight}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning rate out of range: {self.learning_rate}")


@dataclass(frozen=True)
class AnalyticsSnapshot:
    latest_scores: dict[str, float | None]
    weights: dict[str, float]
    score_series: dict[str, tuple[float, ...]]
    modality_counts: dict[str, int]
    satisfaction_tally: dict[str, int]
    interactions: int


def _clamp01(value: float) -> float:
    return max(0.0, min(1.0, value))


def normalize_command_tokens(
    text: str, stopwords: frozenset[str]
) -> tuple[str, ...]:
    """Enrichment-stripped, stopword-free token set of a command text."""
    try:
        tokens = tokenize(strip_enrichment(text)).tokens
    except EmptyKeywords:
        return ()
    return filter_stopwords(tokens, stopwords)


def alignment(context_tokens: Iterable[str], command_tokens: Iterable[str]) -> float:
    """Set overlap between a chosen context and the command that shipped."""
    ca, cb = set(context_tokens), set(command_tokens)
    if not ca and not cb:
        raise UndefinedSimilarity("both token sets are empty")
    return len(ca & cb) / len(ca | cb)


def _ms_bonus(rec: InteractionRecord) -> float:
    if rec.custom:
        # The selector never ran for a custom command: credit it when its rule
        # would have picked the user's modality anyway, otherwise abstain.
        rule_choice, _ = suggest_modality(rec.selected_context, SCORE_FLOOR)
        return MS_MATCH_BONUS if rule_choice is rec.suggestion.user_selected else 0.0
    if rec.suggestion.suggested is rec.suggestion.user_selected:
        return MS_MATCH_BONUS
    return MS_MISMATCH_PENALTY


def compute_bonus(
    module: ModuleId, rec: InteractionRecord, stopwords: frozenset[str]
) -> float:
    if module is ModuleId.TP:
        tokens = normalize_command_tokens(rec.final_command, stopwords)
        return TP_BONUS if TP_BONUS_TOKENS & set(tokens) else 0.0
    if module is ModuleId.IR:
        return IR_BONUS if IR_BONUS_TOKEN in rec.keywords else 0.0
    if module is ModuleId.MS:
        return _ms_bonus(rec)
    context_tokens = normalize_command_tokens(rec.selected_context, stopwords)
    command_tokens = normalize_command_tokens(rec.final_command, stopwords)
    try:
        return CG_ALIGN_FACTOR * alignment(context_tokens, command_tokens)
    except UndefinedSimilarity:
        log.warning("alignment undefined for %r; bonus 0", rec.selected_context)
        return 0.0


def blend_score(base: float, bonus: float, weight: float) -> float:
    """Average the bonus-adjusted score with the module weight, clamped to [0, 1]."""
    return _clamp01((base + bonus + weight) / 2.0)


def update_weight(state: ModuleLearningState, score: float) -> ModuleLearningState:
    """Move the weight toward the score by the learning rate; history grows by one."""
    state.weight = _clamp01(state.weight + state.learning_rate * (score - state.weight))
    state.score_history.append(score)
    return state


def classify_satisfaction(rec: InteractionRecord) -> SatisfactionLevel:
    criteria = (
        rec.base_score >= 0.85,
        not rec.suggestion.overridden,
        rec.suggestion.user_selected is Modality.TELEOP and rec.teleop_key is not None,
    )
    return SatisfactionLevel.from_count(sum(criteria))


def record_to_json(rec: InteractionRecord) -> str:
    return json.dumps(
        {
            "timestamp": rec.timestamp,
            "keywords": list(rec.keywords),
            "selected_context": rec.selected_context,
            "top_context": rec.top_context,
            "final_command": rec.final_command,
            "base_score": rec.base_score,
            "suggested": rec.suggestion.suggested.value,
            "suggestion_reason": rec.suggestion.reason.value,
            "user_selected": rec.suggestion.user_selected.value,
            "overridden": rec.suggestion.overridden,
            "custom": rec.custom,
            "teleop_key": rec.teleop_key,
            "comment": rec.comment,
            "robot_id": rec.robot_id,
        },
        separators=(",", ":"),
        ensure_ascii=False,
    )


def record_from_json(line: str) -> InteractionRecord:
    obj = json.loads(line)
    suggestion = ModalitySuggestion(
        suggested=Modality.parse(obj["suggested"]),
        reason=SuggestionReason(obj["suggestion_reason"]),
        user_selected=Modality.parse(obj["user_selected"]),
        overridden=bool(obj["overridden"]),
    )
    return InteractionRecord(
        keywords=KeywordSet(tuple(obj["keywords"])),
        selected_context=obj["selected_context"],
        top_context=obj["top_context"],
        final_command=obj["final_command"],
        base_score=float(obj["base_score"]),
        suggestion=suggestion,
        custom=bool(obj["custom"]),
        robot_id=obj["robot_id"],
        timestamp=int(obj["timestamp"]),
        teleop_key=obj.get("teleop_key"),
        comment=obj.get("comment"),
    )


class LearningTracker:
    """Serialized writer over the four module states plus usage tallies."""

    def __init__(
        self,
        *,
        learning_rate: float = 0.1,
        initial_weight: float = 0.8,
        stopwords: frozenset[str] = frozenset(),
        log_path: str | Path | None = None,
    ):
        self._lock = threading.Lock()
        self._stopwords = stopwords
        self._states = {
            m: ModuleLearningState(m, initial_weight, learning_rate) for m in ModuleId
        }
        self._modality_counts = {m.value: 0 for m in Modality}
        self._satisfaction_tally = {s.value: 0 for s in SatisfactionLevel}
        self._records: list[InteractionRecord] = []
        self._log_path = Path(log_path) if log_path is not None else None

    # -- recording ----------------------------------------------------------

    def record_interaction(self, rec: InteractionRecord) -> AnalyticsSnapshot:
        with self._lock:
            self._apply(rec)
            if self._log_path is not None:
                try:
                    with self._log_path.open("a", encoding="utf-8") as fh:
                        fh.write(record_to_json(rec) + "\n")
                except OSError as exc:
                    log.warning("interaction log write failed: %s", exc)
            return self._snapshot()

    def _apply(self, rec: InteractionRecord) -> None:
        for module, state in self._states.items():
            bonus = compute_bonus(module, rec, self._stopwords)
            score = blend_score(rec.base_score, bonus, state.weight)
            update_weight(state, score)
        self._modality_counts[rec.suggestion.user_selected.value] += 1
        self._satisfaction_tally[classify_satisfaction(rec).value] += 1
        self._records.append(rec)

    def attach_comment(self, index: int, comment: str) -> None:
        """Last write wins; the log gets an amended copy of the record."""
        with self._lock:
            rec = self._records[index]
            amended = InteractionRecord(
                keywords=rec.keywords,
                selected_context=rec.selected_context,
                top_context=rec.top_context,
                final_command=rec.final_command,
                base_score=rec.base_score,
                suggestion=rec.suggestion,
                custom=rec.custom,
                robot_id=rec.robot_id,
                timestamp=rec.timestamp,
                teleop_key=rec.teleop_key,
                comment=comment,
            )
            self._records[index] = amended
            if self._log_path is not None:
                try:
                    with self._log_path.open("a", encoding="utf-8") as fh:
                        fh.write(record_to_json(amended) + "\n")
                except OSError as exc:
                    log.warning("interaction log write failed: %s", exc)

    def replay(self, path: str | Path) -> int:
        """Rebuild state from a previous run's interaction log."""
        count = 0
        with self._lock:
            for line in Path(path).read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                self._apply(record_from_json(line))
                count += 1
        return count

    # -- reading ------------------------------------------------------------

    def snapshot(self) -> AnalyticsSnapshot:
        with self._lock:
            return self._snapshot()

    def _snapshot(self) -> AnalyticsSnapshot:
        return AnalyticsSnapshot(
            latest_scores={
                m.value: (s.score_history[-1] if s.score_history else None)
                for m, s in self._states.items()
            },
            weights={m.value: s.weight for m, s in self._states.items()},
            score_series={
                m.value: tuple(s.score_history) for m, s in self._states.items()
            },
            modality_counts=dict(self._modality_counts),
            satisfaction_tally=dict(self._satisfaction_tally),
            interactions=len(self._records),
        )

    def records(self) -> list[InteractionRecord]:
        with self._lock:
            return list(self._records)

    def state(self, module: ModuleId) -> ModuleLearningState:
        with self._lock:
            s = self._states[module]
            return ModuleLearningState(
                s.module, s.weight, s.learning_rate, list(s.score_history)
            )
