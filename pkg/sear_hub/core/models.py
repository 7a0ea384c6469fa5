"""Доменные типы пайплайна: сигналы AR, роли, профили, стратегии, анкеты.

Все типы неизменяемые (frozen dataclass). Каждый тип умеет
сериализоваться в JSON-объект с полями в lowerCamelCase (to_dict/from_dict).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union


class Modality(Enum):
    VISUAL = "Visual"
    AUDIO = "Audio"
    ENVIRONMENT = "Environment"


class Speaker(Enum):
    PRIMARY = "Primary"
    OTHER = "Other"
    SILENCE = "Silence"


class Setting(Enum):
    INDOOR = "Indoor"
    OUTDOOR = "Outdoor"
    UNKNOWN = "Unknown"


class FactCategory(Enum):
    DEMOGRAPHIC = "Demographic"
    RELATIONAL = "Relational"
    INTEREST = "Interest"
    EVENT = "Event"
    VULNERABILITY = "Vulnerability"


class SourceModality(Enum):
    TEXT = "Text"
    IMAGE_CAPTION = "ImageCaption"
    VIDEO_CAPTION = "VideoCaption"


class PredicateKind(Enum):
    TRAIT_EQUALS = "TraitEquals"
    HAS_FACT_CATEGORY = "HasFactCategory"
    FACT_KEYWORD = "FactKeyword"


class Author(Enum):
    AGENT = "Agent"
    TARGET = "Target"


class Outcome(Enum):
    COMPLETED = "Completed"
    ABORTED_BY_TARGET = "AbortedByTarget"
    EXHAUSTED = "Exhausted"


class Section(Enum):
    BASELINE_COMPARISON = "BaselineComparison"
    SUBJECTIVE_EXPERIENCE = "SubjectiveExperience"
    SE_EFFECTIVENESS = "SEEffectiveness"
    OPEN_TEXT = "OpenText"


# --- Этап 1: сигналы AR ---------------------------------------------------

@dataclass(frozen=True)
class CueEvent:
    """Аннотация кадра: выражение лица, объект окружения и т.п."""
    timestamp_ms: int
    modality: Modality
    payload: Dict[str, Any] = field(default_factory=dict)
    track_id: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "timestampMs": self.timestamp_ms,
            "modality": self.modality.value,
            "payload": dict(self.payload),
        }
        if self.track_id is not None:
            data["trackId"] = self.track_id
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> CueEvent:
        return cls(
            timestamp_ms=data["timestampMs"],
            modality=Modality(data["modality"]),
            payload=dict(data.get("payload", {})),
            track_id=data.get("trackId"),
        )


@dataclass(frozen=True)
class TranscriptToken:
    """Слово или фраза, уже распознанные речевым движком."""
    text: str
    start_ms: int
    end_ms: int

    def to_dict(self) -> Dict[str, Any]:
        return {"text": self.text, "startMs": self.start_ms, "endMs": self.end_ms}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> TranscriptToken:
        return cls(text=data["text"], start_ms=data["startMs"], end_ms=data["endMs"])


@dataclass(frozen=True)
class Segment:
    speaker: Speaker
    text: str
    start_ms: int
    end_ms: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "speaker": self.speaker.value,
            "text": self.text,
            "startMs": self.start_ms,
            "endMs": self.end_ms,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Segment:
        return cls(
            speaker=Speaker(data["speaker"]),
            text=data["text"],
            start_ms=data["startMs"],
            end_ms=data["endMs"],
        )


@dataclass(frozen=True)
class FaceTrack:
    """Трек лица. speaking_ms - моменты, когда аннотатор видел, что человек говорит."""
    track_id: str
    expression_scores: Dict[str, float]
    dominant_expression: str
    speaking_ms: Tuple[int, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trackId": self.track_id,
            "expressionScores": dict(sorted(self.expression_scores.items())),
            "dominantExpression": self.dominant_expression,
            "speakingMs": list(self.speaking_ms),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> FaceTrack:
        return cls(
            track_id=data["trackId"],
            expression_scores=dict(data.get("expressionScores", {})),
            dominant_expression=data["dominantExpression"],
            speaking_ms=tuple(data.get("speakingMs", ())),
        )


@dataclass(frozen=True)
class EnvironmentContext:
    object_labels: Tuple[str, ...] = ()
    setting: Setting = Setting.UNKNOWN

    def to_dict(self) -> Dict[str, Any]:
        return {"objectLabels": list(self.object_labels), "setting": self.setting.value}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> EnvironmentContext:
        return cls(
            object_labels=tuple(data.get("objectLabels", ())),
            setting=Setting(data.get("setting", Setting.UNKNOWN.value)),
        )


@dataclass(frozen=True)
class Emotion:
    label: str
    confidence: float

    def to_dict(self) -> Dict[str, Any]:
        return {"label": self.label, "confidence": self.confidence}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Emotion:
        return cls(label=data["label"], confidence=data["confidence"])


@dataclass(frozen=True)
class SocialContextFrame:
    """Окно социального контекста: лица, реплики, окружение, эмоции."""
    window_start_ms: int
    window_end_ms: int
    face_tracks: Tuple[FaceTrack, ...] = ()
    transcript: Tuple[Segment, ...] = ()
    environment: EnvironmentContext = EnvironmentContext()
    emotion: Dict[str, Emotion] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "windowStartMs": self.window_start_ms,
            "windowEndMs": self.window_end_ms,
            "faceTracks": [t.to_dict() for t in self.face_tracks],
            "transcript": [s.to_dict() for s in self.transcript],
            "environment": self.environment.to_dict(),
            "emotion": {k: v.to_dict() for k, v in sorted(self.emotion.items())},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> SocialContextFrame:
        return cls(
            window_start_ms=data["windowStartMs"],
            window_end_ms=data["windowEndMs"],
            face_tracks=tuple(FaceTrack.from_dict(t) for t in data.get("faceTracks", [])),
            transcript=tuple(Segment.from_dict(s) for s in data.get("transcript", [])),
            environment=EnvironmentContext.from_dict(data.get("environment", {})),
            emotion={k: Emotion.from_dict(v) for k, v in data.get("emotion", {}).items()},
        )


# --- Этап 2: роли и профили ----------------------------------------------

@dataclass(frozen=True)
class Fact:
    category: FactCategory
    text: str
    salience: float = 0.5
    source_modality: SourceModality = SourceModality.TEXT
    observed_at_ms: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "category": self.category.value,
            "text": self.text,
            "salience": self.salience,
            "sourceModality": self.source_modality.value,
            "observedAtMs": self.observed_at_ms,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Fact:
        return cls(
            category=FactCategory(data["category"]),
            text=data["text"],
            salience=data.get("salience", 0.5),
            source_modality=SourceModality(data.get("sourceModality", "Text")),
            observed_at_ms=data.get("observedAtMs", 0),
        )


@dataclass(frozen=True)
class RoleRecord:
    role_id: str
    pseudonym: str
    traits: Dict[str, str] = field(default_factory=dict)
    facts: Tuple[Fact, ...] = ()
    embedding_ids: Tuple[int, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "roleId": self.role_id,
            "pseudonym": self.pseudonym,
            "traits": dict(sorted(self.traits.items())),
            "facts": [f.to_dict() for f in self.facts],
            "embeddingIds": list(self.embedding_ids),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> RoleRecord:
        return cls(
            role_id=data["roleId"],
            pseudonym=data["pseudonym"],
            traits=dict(data.get("traits", {})),
            facts=tuple(Fact.from_dict(f) for f in data.get("facts", [])),
            embedding_ids=tuple(data.get("embeddingIds", [])),
        )


@dataclass(frozen=True)
class EmbeddingEntry:
    entry_id: int
    vector: Tuple[float, ...]
    role_id: str
    source_ref: str
    modality: SourceModality = SourceModality.TEXT

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entryId": self.entry_id,
            "vector": list(self.vector),
            "roleId": self.role_id,
            "sourceRef": self.source_ref,
            "modality": self.modality.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> EmbeddingEntry:
        return cls(
            entry_id=data["entryId"],
            vector=tuple(float(x) for x in data["vector"]),
            role_id=data["roleId"],
            source_ref=data["sourceRef"],
            modality=SourceModality(data.get("modality", "Text")),
        )


@dataclass(frozen=True)
class RankedFact:
    fact: Fact
    rank_score: float

    def to_dict(self) -> Dict[str, Any]:
        return {"fact": self.fact.to_dict(), "rankScore": self.rank_score}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> RankedFact:
        return cls(fact=Fact.from_dict(data["fact"]), rank_score=data["rankScore"])


@dataclass(frozen=True)
class SocialProfile:
    """Профиль цели: ядро личности и факты, отсортированные по полезности."""
    role_id: str
    core_identity: Dict[str, str] = field(default_factory=dict)
    ranked_facts: Tuple[RankedFact, ...] = ()
    environment_context: EnvironmentContext = EnvironmentContext()
    last_updated_ms: int = 0

    @property
    def facts(self) -> Tuple[Fact, ...]:
        return tuple(rf.fact for rf in self.ranked_facts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "roleId": self.role_id,
            "coreIdentity": dict(sorted(self.core_identity.items())),
            "rankedFacts": [rf.to_dict() for rf in self.ranked_facts],
            "environmentContext": self.environment_context.to_dict(),
            "lastUpdatedMs": self.last_updated_ms,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> SocialProfile:
        return cls(
            role_id=data["roleId"],
            core_identity=dict(data.get("coreIdentity", {})),
            ranked_facts=tuple(RankedFact.from_dict(r) for r in data.get("rankedFacts", [])),
            environment_context=EnvironmentContext.from_dict(
                data.get("environmentContext", {})),
            last_updated_ms=data.get("lastUpdatedMs", 0),
        )


# --- Этап 3: стратегии и диалог ------------------------------------------

@dataclass(frozen=True)
class Predicate:
    kind: PredicateKind
    argument: str
    weight: float = 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "argument": self.argument, "weight": self.weight}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Predicate:
        return cls(
            kind=PredicateKind(data["kind"]),
            argument=data["argument"],
            weight=data.get("weight", 1.0),
        )


@dataclass(frozen=True)
class StageSpec:
    name: str
    objective: str
    prompt_skeleton: str
    success_cues: Tuple[str, ...] = ()
    max_retries: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "objective": self.objective,
            "promptSkeleton": self.prompt_skeleton,
            "successCues": list(self.success_cues),
            "maxRetries": self.max_retries,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> StageSpec:
        return cls(
            name=data["name"],
            objective=data["objective"],
            prompt_skeleton=data["promptSkeleton"],
            success_cues=tuple(data.get("successCues", ())),
            max_retries=data.get("maxRetries", 0),
        )


@dataclass(frozen=True)
class StrategyTemplate:
    """Шаблон стратегии: требования к профилю и упорядоченные этапы."""
    template_id: str
    priority: int = 0
    requirements: Tuple[Predicate, ...] = ()
    stages: Tuple[StageSpec, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "templateId": self.template_id,
            "priority": self.priority,
            "requirements": [p.to_dict() for p in self.requirements],
            "stages": [s.to_dict() for s in self.stages],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> StrategyTemplate:
        return cls(
            template_id=data["templateId"],
            priority=data.get("priority", 0),
            requirements=tuple(Predicate.from_dict(p) for p in data.get("requirements", [])),
            stages=tuple(StageSpec.from_dict(s) for s in data.get("stages", [])),
        )


@dataclass(frozen=True)
class Utterance:
    author: Author
    text: str
    stage_name: str
    turn_index: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "author": self.author.value,
            "text": self.text,
            "stageName": self.stage_name,
            "turnIndex": self.turn_index,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Utterance:
        return cls(
            author=Author(data["author"]),
            text=data["text"],
            stage_name=data["stageName"],
            turn_index=data["turnIndex"],
        )


@dataclass(frozen=True)
class ConversationState:
    """История диалога, текущий этап и веса тем. outcome=None - диалог идёт."""
    history: Tuple[Utterance, ...] = ()
    current_stage_index: int = 0
    topic_weights: Dict[str, float] = field(default_factory=dict)
    outcome: Optional[Outcome] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "history": [u.to_dict() for u in self.history],
            "currentStageIndex": self.current_stage_index,
            "topicWeights": dict(sorted(self.topic_weights.items())),
            "outcome": self.outcome.value if self.outcome else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ConversationState:
        outcome = data.get("outcome")
        return cls(
            history=tuple(Utterance.from_dict(u) for u in data.get("history", [])),
            current_stage_index=data.get("currentStageIndex", 0),
            topic_weights=dict(data.get("topicWeights", {})),
            outcome=Outcome(outcome) if outcome else None,
        )


# --- Анкета ---------------------------------------------------------------

AnswerValue = Union[int, bool, str]


@dataclass(frozen=True)
class QuestionnaireResponse:
    participant_pseudonym: str
    section: Section
    question_id: str
    value: AnswerValue

    def to_dict(self) -> Dict[str, Any]:
        return {
            "participantPseudonym": self.participant_pseudonym,
            "section": self.section.value,
            "questionId": self.question_id,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> QuestionnaireResponse:
        return cls(
            participant_pseudonym=data["participantPseudonym"],
            section=Section(data["section"]),
            question_id=data["questionId"],
            value=data["value"],
        )
