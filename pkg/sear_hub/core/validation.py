"""Проверка инвариантов доменных типов.

validate никогда не бросает исключений: результат - список нарушений
с путём до поля. Пустой список означает корректное значение.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import singledispatch
from typing import Any, Iterable, List, Optional

from sear_hub.core.models import (
    Author,
    ConversationState,
    CueEvent,
    EmbeddingEntry,
    Fact,
    Modality,
    QuestionnaireResponse,
    RoleRecord,
    Section,
    SocialContextFrame,
    SocialProfile,
    Speaker,
    StrategyTemplate,
    TranscriptToken,
)
from sear_hub.infra.settings import SettingsLoader

NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str

    def __str__(self) -> str:
        return f"{self.path}: {self.rule}"


def _join(prefix: str, name: str) -> str:
    if not prefix:
        return name
    if name.startswith("["):
        return f"{prefix}{name}"
    return f"{prefix}.{name}"


def _in_unit(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) \
        and math.isfinite(value) and 0.0 <= value <= 1.0


def validate(entity: Any, path: str = "", **context) -> List[Violation]:
    """
    Возвращает список нарушенных инвариантов.
    context: stage_count для ConversationState, dimension для EmbeddingEntry,
    schema для QuestionnaireResponse.
    """
    try:
        return list(_validate(entity, path, **context))
    except Exception as e:
        return [Violation(path or "$", f"malformed value: {type(e).__name__}: {e}")]


@singledispatch
def _validate(entity: Any, path: str, **context) -> Iterable[Violation]:
    if isinstance(entity, (list, tuple)):
        return _validate_sequence(entity, path, **context)
    return [Violation(path or "$", f"unknown domain type {type(entity).__name__}")]


def _validate_sequence(items, path: str, **context) -> Iterable[Violation]:
    violations = []
    for i, item in enumerate(items):
        violations.extend(validate(item, _join(path, f"[{i}]"), **context))
    role_ids = [r.role_id for r in items if isinstance(r, RoleRecord)]
    if len(role_ids) != len(set(role_ids)):
        violations.append(Violation(path or "$", "roleId unique within a role database"))
    return violations


@_validate.register
def _(entity: CueEvent, path: str, **context) -> Iterable[Violation]:
    out = []
    if not isinstance(entity.timestamp_ms, int) or entity.timestamp_ms < 0:
        out.append(Violation(_join(path, "timestampMs"), "timestampMs ≥ 0"))
    if not isinstance(entity.modality, Modality):
        out.append(Violation(_join(path, "modality"),
                             "modality ∈ {Visual, Audio, Environment}"))
    elif entity.modality is Modality.VISUAL and not entity.track_id:
        out.append(Violation(_join(path, "trackId"), "Visual cue carries a trackId"))
    elif entity.modality is Modality.ENVIRONMENT and entity.track_id is not None:
        out.append(Violation(_join(path, "trackId"), "Environment cue has no trackId"))
    return out


@_validate.register
def _(entity: TranscriptToken, path: str, **context) -> Iterable[Violation]:
    out = []
    if entity.start_ms < 0:
        out.append(Violation(_join(path, "startMs"), "startMs ≥ 0"))
    if entity.end_ms < entity.start_ms:
        out.append(Violation(_join(path, "endMs"), "startMs ≤ endMs"))
    return out


@_validate.register
def _(entity: SocialContextFrame, path: str, **context) -> Iterable[Violation]:
    out = []
    start, end = entity.window_start_ms, entity.window_end_ms
    if not start < end:
        out.append(Violation(_join(path, "windowStartMs"), "windowStartMs < windowEndMs"))
    declared = set(SettingsLoader().get("EXPRESSION_KEYS"))
    for i, track in enumerate(entity.face_tracks):
        tpath = _join(path, f"faceTracks[{i}]")
        for key, score in track.expression_scores.items():
            if key not in declared:
                out.append(Violation(_join(tpath, key), "expression key is declared"))
            if not _in_unit(score):
                out.append(Violation(_join(tpath, key), "expression score ∈ [0,1]"))
    for i, seg in enumerate(entity.transcript):
        spath = _join(path, f"transcript[{i}]")
        if seg.speaker not in (Speaker.PRIMARY, Speaker.OTHER):
            out.append(Violation(_join(spath, "speaker"), "speaker ∈ {Primary, Other}"))
        if not (start <= seg.start_ms <= seg.end_ms <= end):
            out.append(Violation(spath, "segment lies within the window"))
    for track_id, emotion in sorted(entity.emotion.items()):
        if not _in_unit(emotion.confidence):
            out.append(Violation(_join(path, f"emotion.{track_id}.confidence"),
                                 "confidence ∈ [0,1]"))
    return out


@_validate.register
def _(entity: Fact, path: str, **context) -> Iterable[Violation]:
    out = []
    if not isinstance(entity.text, str) or not " ".join(entity.text.split()):
        out.append(Violation(_join(path, "text"), "text non-empty"))
    if not _in_unit(entity.salience):
        out.append(Violation(_join(path, "salience"), "salience ∈ [0,1]"))
    return out


@_validate.register
def _(entity: RoleRecord, path: str, **context) -> Iterable[Violation]:
    out = []
    if not entity.role_id:
        out.append(Violation(_join(path, "roleId"), "roleId non-empty"))
    vocabulary = set(SettingsLoader().get("TRAIT_VOCABULARY"))
    for key in sorted(entity.traits):
        if key not in vocabulary:
            out.append(Violation(_join(path, f"traits.{key}"),
                                 "trait key in declared vocabulary"))
    for i, fact in enumerate(entity.facts):
        out.extend(validate(fact, _join(path, f"facts[{i}]")))
    return out


@_validate.register
def _(entity: EmbeddingEntry, path: str, dimension: Optional[int] = None,
      **context) -> Iterable[Violation]:
    out = []
    dimension = dimension or SettingsLoader().get("EMBEDDING_DIM")
    if len(entity.vector) != dimension:
        out.append(Violation(_join(path, "vector"), f"dimension equals D={dimension}"))
    norm = math.sqrt(math.fsum(x * x for x in entity.vector))
    if abs(norm - 1.0) > NORM_TOLERANCE:
        out.append(Violation(_join(path, "vector"), "|‖vector‖₂ − 1| ≤ 1e-6"))
    return out


@_validate.register
def _(entity: SocialProfile, path: str, **context) -> Iterable[Violation]:
    out = []
    ranked = entity.ranked_facts
    for i in range(1, len(ranked)):
        prev, cur = ranked[i - 1], ranked[i]
        if cur.rank_score > prev.rank_score or (
                cur.rank_score == prev.rank_score and cur.fact.text < prev.fact.text):
            out.append(Violation(_join(path, f"rankedFacts[{i}]"),
                                 "rankedFacts sorted by rankScore, ties by text"))
    for i, rf in enumerate(ranked):
        out.extend(validate(rf.fact, _join(path, f"rankedFacts[{i}].fact")))
    return out


@_validate.register
def _(entity: StrategyTemplate, path: str, **context) -> Iterable[Violation]:
    out = []
    if not entity.stages:
        out.append(Violation(_join(path, "stages"), "at least one stage"))
    names = [s.name for s in entity.stages]
    if len(names) != len(set(names)):
        out.append(Violation(_join(path, "stages"), "stage names unique within template"))
    for i, stage in enumerate(entity.stages):
        if stage.max_retries < 0:
            out.append(Violation(_join(path, f"stages[{i}].maxRetries"), "maxRetries ≥ 0"))
    for i, predicate in enumerate(entity.requirements):
        if not predicate.weight > 0:
            out.append(Violation(_join(path, f"requirements[{i}].weight"), "weight > 0"))
    return out


@_validate.register
def _(entity: ConversationState, path: str, stage_count: Optional[int] = None,
      **context) -> Iterable[Violation]:
    out = []
    for i, utt in enumerate(entity.history):
        expected = Author.AGENT if i % 2 == 0 else Author.TARGET
        if utt.author is not expected:
            out.append(Violation(_join(path, f"history[{i}].author"), "authors alternate"))
        if i and utt.turn_index <= entity.history[i - 1].turn_index:
            out.append(Violation(_join(path, f"history[{i}].turnIndex"),
                                 "turnIndex strictly increasing"))
    if stage_count is not None and entity.current_stage_index > stage_count:
        out.append(Violation(_join(path, "currentStageIndex"),
                             "currentStageIndex ≤ number of stages"))
    for topic, weight in sorted(entity.topic_weights.items()):
        if weight < 0:
            out.append(Violation(_join(path, f"topicWeights.{topic}"), "weight ≥ 0"))
    return out


@_validate.register
def _(entity: QuestionnaireResponse, path: str, schema=None,
      **context) -> Iterable[Violation]:
    from sear_hub.survey.schema import QuestionKind, default_schema

    out = []
    schema = schema or default_schema()
    if not isinstance(entity.section, Section):
        return [Violation(_join(path, "section"), "section from the declared enum")]
    question = schema.find(entity.section, entity.question_id)
    if question is None:
        out.append(Violation(_join(path, "questionId"),
                             "questionId belongs to the declared schema"))
        return out
    value = entity.value
    if question.kind is QuestionKind.LIKERT5:
        if isinstance(value, bool) or value not in (1, 2, 3, 4, 5):
            out.append(Violation(_join(path, "value"), "Likert values ∈ {1,2,3,4,5}"))
    elif question.kind is QuestionKind.YES_NO:
        if not isinstance(value, bool):
            out.append(Violation(_join(path, "value"), "YesNo value is a boolean"))
    elif not isinstance(value, str):
        out.append(Violation(_join(path, "value"), "Text value is a string"))
    return out
