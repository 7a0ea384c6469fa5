"""Схема анкеты: разделы, вопросы и их типы (Likert5 / YesNo / Text)."""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Tuple

from sear_hub.core.exceptions import FormatError
from sear_hub.core.models import Section
from sear_hub.infra.database import DatabaseManager

BASELINE_QUESTIONS = ("Q1-Bare", "Q2-ARLLM", "Q3-SEAR")
TRUST_BEFORE = "TrustBefore"
TRUST_AFTER = "TrustAfter"


class QuestionKind(Enum):
    LIKERT5 = "Likert5"
    YES_NO = "YesNo"
    TEXT = "Text"


@dataclass(frozen=True)
class Question:
    question_id: str
    kind: QuestionKind
    prompt: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"questionId": self.question_id, "kind": self.kind.value, "prompt": self.prompt}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Question:
        return cls(data["questionId"], QuestionKind(data["kind"]), data.get("prompt", ""))


@dataclass(frozen=True)
class QuestionnaireSchema:
    sections: Tuple[Tuple[Section, Tuple[Question, ...]], ...]

    def __post_init__(self):
        seen = set()
        for _, questions in self.sections:
            for q in questions:
                if q.question_id in seen:
                    raise ValueError(f"questionId '{q.question_id}' повторяется")
                seen.add(q.question_id)

    def questions(self) -> Iterator[Tuple[Section, Question]]:
        for section, questions in self.sections:
            for q in questions:
                yield section, q

    def find(self, section: Section, question_id: str) -> Optional[Question]:
        for s, q in self.questions():
            if s is section and q.question_id == question_id:
                return q
        return None

    def by_id(self, question_id: str) -> Optional[Question]:
        return next((q for _, q in self.questions() if q.question_id == question_id), None)

    def section_of(self, question_id: str) -> Optional[Section]:
        return next((s for s, q in self.questions() if q.question_id == question_id), None)

    def to_dict(self) -> Dict[str, Any]:
        return {"sections": [{"section": s.value, "questions": [q.to_dict() for q in qs]}
                             for s, qs in self.sections]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> QuestionnaireSchema:
        return cls(tuple(
            (Section(block["section"]),
             tuple(Question.from_dict(q) for q in block["questions"]))
            for block in data["sections"]
        ))


def _likert(*items: Tuple[str, str]) -> Tuple[Question, ...]:
    return tuple(Question(qid, QuestionKind.LIKERT5, text) for qid, text in items)


@lru_cache(maxsize=1)
def default_schema() -> QuestionnaireSchema:
    """Встроенная анкета пост-экспериментального опроса (n=60, шкала 1-5)."""
    return QuestionnaireSchema((
        (Section.BASELINE_COMPARISON, _likert(
            ("Q1-Bare", "Rate the conversation held without any assistance."),
            ("Q2-ARLLM", "Rate the conversation assisted by AR and a multimodal LLM."),
            ("Q3-SEAR", "Rate the conversation assisted by the full pipeline."),
        )),
        (Section.SUBJECTIVE_EXPERIENCE, _likert(
            ("Relevance", "The conversation matched my social information."),
            ("Appropriateness", "The questions asked were proper."),
            ("Naturalness", "The opening felt natural."),
            ("Pacing", "The pace of the conversation felt right."),
            ("Sincerity", "The person's interest seemed sincere."),
            ("EmotionalProgression", "My feelings improved as the conversation went on."),
            ("ARComfort", "I felt more relaxed with AR."),
            ("BareWillingness", "I would take up this conversation without AR."),
            ("FutureIntent", "I would talk with this person again."),
            ("Depth", "The assistance added depth to the conversation."),
            ("Acceptance", "I would interact with the system again."),
        )),
        (Section.SE_EFFECTIVENESS, _likert(
            ("PhotoLink", "I would open photo links shared by the person."),
            ("SocialApp", "I would add the person on a social app."),
            ("SMS", "I would open text messages from the person."),
            ("PhoneCall", "I would answer a phone call from the person."),
            (TRUST_BEFORE, "My trust in the person before the conversation."),
            (TRUST_AFTER, "My trust in the person after the conversation."),
        )),
        (Section.OPEN_TEXT, (
            Question("Feedback", QuestionKind.TEXT, "Any other comments on the interaction."),
        )),
    ))


def load_schema(path: str | Path) -> QuestionnaireSchema:
    """questionnaire.json заменяет встроенную анкету целиком."""
    try:
        return QuestionnaireSchema.from_dict(DatabaseManager().load(path))
    except json.JSONDecodeError as e:
        raise FormatError(str(path), e.msg, e.lineno)
    except (KeyError, ValueError, TypeError) as e:
        raise FormatError(str(path), f"некорректная анкета: {e}")
