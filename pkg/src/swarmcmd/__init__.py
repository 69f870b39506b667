"""swarmcmd: keyword-driven command and control for a simulated robot swarm."""

from .analytics import (
    InteractionRecord,
    LearningTracker,
    ModuleId,
    SatisfactionLevel,
    blend_score,
    classify_satisfaction,
    compute_bonus,
    update_weight,
)
from .bus import Broker, BusClient
from .config import AppConfig, load_config
from .contexts import (
    CandidateContext,
    ContextEngine,
    ContextProvider,
    jaccard,
    scale_similarity,
)
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
    encode_feedback,
    tokenize,
)
from .orchestrator import Orchestrator
from .pipeline import (
    IntentLabel,
    ModalitySuggestion,
    recognize_intent,
    resolve_modality,
    suggest_modality,
)
from .robot import RobotNode

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "Broker",
    "BusClient",
    "CandidateContext",
    "CommandEnvelope",
    "ContextEngine",
    "ContextProvider",
    "FeedbackEnvelope",
    "FeedbackStatus",
    "IntentLabel",
    "InteractionRecord",
    "KeywordSet",
    "LearningTracker",
    "Modality",
    "ModalitySuggestion",
    "ModuleId",
    "Orchestrator",
    "RobotNode",
    "RobotState",
    "SatisfactionLevel",
    "blend_score",
    "classify_satisfaction",
    "compute_bonus",
    "decode_envelope",
    "decode_feedback",
    "encode_envelope",
    "encode_feedback",
    "jaccard",
    "load_config",
    "recognize_intent",
    "resolve_modality",
    "scale_similarity",
    "suggest_modality",
    "tokenize",
    "update_weight",
]
