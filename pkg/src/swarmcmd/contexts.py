"""Candidate context generation and similarity scoring.

Keywords go in, exactly four scored command phrasings come out. The template
generator is a pure function of the keyword set and the configured tables, so
scores and orderings are reproducible run to run. An optional external
generator can supply the four texts instead; any failure there falls back to
the templates and is logged, never surfaced.
"""

from __future__ import annotations

import json
import logging
import urllib.request
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .config import AppConfig, SynonymRule, TemplateTables
from .domain import KeywordSet, filter_stopwords, tokenize
from .errors import (
    EmptyKeywords,
    ExternalProviderUnavailable,
    InvalidRatio,
    UndefinedSimilarity,
)

log = logging.getLogger(__name__)

SCORE_FLOOR = 0.6
SCORE_SPAN = 0.4
CANDIDATE_COUNT = 4


@dataclass(frozen=True)
class CandidateContext:
    index: int  # generation index, 1..4
    text: str
    token_set: tuple[str, ...]  # stopword-stripped tokens of `text`
    jaccard: float | None = None
    score: float | None = None


@dataclass(frozen=True)
class ContextProvider:
    mode: str = "template"  # "template" | "external"
    endpoint: str | None = None
    timeout_s: float = 2.0


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """Plain set-overlap ratio |a & b| / |a | b|."""
    sa, sb = set(a), set(b)
    if not sa and not sb:
        raise UndefinedSimilarity("both token sets are empty")
    return len(sa & sb) / len(sa | sb)


def jaccard_with_synonyms(
    a: Iterable[str], b: Iterable[str], table: dict[str, SynonymRule]
) -> float:
    """Jaccard over canonicalized tokens, discounted per synonym rewrite.

    Tokens are mapped to their canonical form first. Each canonical token that
    the two sides only share because one side was rewritten scales the final
    ratio by that rule's weight. With an empty table this is `jaccard`.
    """
    sa, sb = set(a), set(b)
    if not sa and not sb:
        raise UndefinedSimilarity("both token sets are empty")
    if not table:
        return len(sa & sb) / len(sa | sb)

    def canon(token: str) -> str:
        rule = table.get(token)
        return rule.canonical if rule else token

    ca = {canon(t) for t in sa}
    cb = {canon(t) for t in sb}
    ratio = len(ca & cb) / len(ca | cb)
    for shared in ca & cb:
        raw_a = {t for t in sa if canon(t) == shared}
        raw_b = {t for t in sb if canon(t) == shared}
        if raw_a & raw_b:
            continue  # literal token in common, no rewrite needed
        weights = [table[t].weight for t in (raw_a | raw_b) if t in table]
        for w in weights:
            ratio *= w
    return ratio


def scale_similarity(j: float) -> float:
    """Affine map of a Jaccard ratio onto the [0.6, 1.0] score band."""
    if not 0.0 <= j <= 1.0:
        raise InvalidRatio(f"ratio out of range: {j!r}")
    return SCORE_FLOOR + SCORE_SPAN * j


def _capitalize(phrase: str) -> str:
    return phrase[0].upper() + phrase[1:] if phrase else phrase


def _template_texts(
    keywords: KeywordSet,
    tables: TemplateTables,
    synonyms: dict[str, SynonymRule] | None,
) -> list[str]:
    action = next((t for t in keywords if t in tables.actions), None)
    directions = [t for t in keywords if t in tables.directions]
    task = next((t for t in keywords if t in tables.tasks), None)
    classified = set(tables.actions) | set(tables.directions) | set(tables.tasks)
    extras = [t for t in keywords if t not in classified]
    if synonyms:
        # Phrase candidates with canonical vocabulary when synonym rules are on.
        extras = [synonyms[t].canonical if t in synonyms else t for t in extras]

    act = action or tables.default_action
    axial = [d for d in directions if d not in tables.lateral_directions]
    left, right = tables.lateral_directions[0], tables.lateral_directions[1]

    if task is not None:
        obj = " ".join(extras) if extras else tables.default_object
        lead = f"{act} {axial[0]}" if axial else act
        texts = [
            f"{task} {obj}",
            f"{lead} and {task}",
            f"{act} {left} and {task}",
            f"{act} {right} and {task}",
        ]
    else:
        lead_dir = axial[0] if axial else tables.default_direction
        texts = [
            f"{act} to the target area",
            f"{act} {lead_dir}",
            f"{act} {left}",
            f"{act} {right}",
        ]
    return [_capitalize(t) for t in texts]


def _fetch_external(
    keywords: KeywordSet, endpoint: str, timeout_s: float
) -> list[str]:
    body = json.dumps({"keywords": list(keywords)}).encode("utf-8")
    request = urllib.request.Request(
        endpoint, data=body, headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout_s) as response:
            payload = json.loads(response.read().decode("utf-8"))
    except Exception as exc:
        raise ExternalProviderUnavailable(str(exc)) from exc
    texts = payload.get("contexts") if isinstance(payload, dict) else None
    if (
        not isinstance(texts, list)
        or len(texts) != CANDIDATE_COUNT
        or len({t for t in texts if isinstance(t, str) and t}) != CANDIDATE_COUNT
    ):
        raise ExternalProviderUnavailable(f"bad provider response: {payload!r}")
    return list(texts)


class ContextEngine:
    """Stateless facade over generation + scoring for one configuration."""

    def __init__(self, config: AppConfig, provider: ContextProvider | None = None):
        self.config = config
        if provider is None:
            if config.external_endpoint:
                provider = ContextProvider(
                    "external", config.external_endpoint, config.external_timeout_s
                )
            else:
                provider = ContextProvider("template")
        self.provider = provider
        self._synonyms = config.synonyms if config.synonyms_enabled else {}

    # -- generation ---------------------------------------------------------

    def generate_contexts(self, keywords: KeywordSet) -> list[CandidateContext]:
        if len(keywords) == 0:
            raise EmptyKeywords("cannot generate contexts without keywords")
        texts: list[str] | None = None
        if self.provider.mode == "external" and self.provider.endpoint:
            try:
                texts = _fetch_external(
                    keywords, self.provider.endpoint, self.provider.timeout_s
                )
            except ExternalProviderUnavailable as exc:
                log.warning("external context provider failed, using templates: %s", exc)
        if texts is None:
            texts = _template_texts(keywords, self.config.templates, self._synonyms)
        assert len(set(texts)) == CANDIDATE_COUNT, texts
        return [
            CandidateContext(index=i, text=text, token_set=self.context_tokens(text))
            for i, text in enumerate(texts, start=1)
        ]

    # -- scoring ------------------------------------------------------------

    def context_tokens(self, text: str) -> tuple[str, ...]:
        """Stopword-stripped tokens of a candidate or custom command text."""
        try:
            tokens = tokenize(text).tokens
        except EmptyKeywords:
            return ()
        return filter_stopwords(tokens, self.config.stopwords)

    def similarity(self, a: Iterable[str], b: Iterable[str]) -> float:
        return jaccard_with_synonyms(a, b, self._synonyms)

    def score_text(self, text: str, keywords: KeywordSet) -> tuple[float, float]:
        """(jaccard, score) of one text against the keywords."""
        tokens = self.context_tokens(text)
        try:
            j = self.similarity(tokens, keywords.tokens)
        except UndefinedSimilarity:
            log.warning("no scorable tokens in %r; treating as no overlap", text)
            j = 0.0
        return j, scale_similarity(j)

    def score_contexts(
        self, keywords: KeywordSet, contexts: Sequence[CandidateContext]
    ) -> list[CandidateContext]:
        scored = []
        for ctx in contexts:
            try:
                j = self.similarity(ctx.token_set, keywords.tokens)
            except UndefinedSimilarity:
                log.warning("candidate %r has no scorable tokens", ctx.text)
                j = 0.0
            scored.append(replace(ctx, jaccard=j, score=scale_similarity(j)))
        scored.sort(key=lambda c: (-c.score, c.index))
        return scored

    def candidates(self, keywords: KeywordSet) -> list[CandidateContext]:
        return self.score_contexts(keywords, self.generate_contexts(keywords))
