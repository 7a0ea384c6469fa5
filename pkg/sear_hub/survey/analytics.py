"""
Описательная статистика анкеты: распределения Likert, средние,
доля top-two-box, доля ответов "да", сдвиг доверия.
Все доли считаются точно (Fraction), округление только при отображении.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from sear_hub.core.exceptions import ArgumentError
from sear_hub.core.models import QuestionnaireResponse, Section
from sear_hub.core.validation import validate
from sear_hub.decorators import log_action
from sear_hub.infra.database import DatabaseManager
from sear_hub.survey.schema import (
    BASELINE_QUESTIONS,
    TRUST_AFTER,
    TRUST_BEFORE,
    QuestionKind,
    QuestionnaireSchema,
    default_schema,
)

LIKERT_VALUES = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str

    def __str__(self) -> str:
        return f"строка {self.line}: {self.reason}"


def format_fraction(value: Optional[Fraction]) -> Optional[str]:
    return None if value is None else f"{value.numerator}/{value.denominator}"


def parse_fraction(text: Optional[str]) -> Optional[Fraction]:
    return None if text is None else Fraction(text)


def _half_up(value: Fraction, places: str) -> Decimal:
    exact = Decimal(value.numerator) / Decimal(value.denominator)
    return exact.quantize(Decimal(places), rounding=ROUND_HALF_UP)


def display_mean(mean: Optional[Fraction]) -> str:
    """4.5 -> '4.50'; неопределённое среднее -> 'n/a'."""
    return "n/a" if mean is None else str(_half_up(mean, "0.01"))


def display_percent(fraction: Optional[Fraction]) -> str:
    """56/60 -> '93.3%' (половина округляется вверх)."""
    return "n/a" if fraction is None else f"{_half_up(fraction * 100, '0.1')}%"


@log_action("LOAD_RESPONSES")
def load_responses(path: str | Path, schema: Optional[QuestionnaireSchema] = None
                   ) -> Tuple[List[QuestionnaireResponse], List[Reject]]:
    """
    Читает responses.ndjson. Невалидные строки попадают в список отказов
    с номером строки, валидные возвращаются. Нечитаемый файл - OSError.
    """
    schema = schema or default_schema()
    records: List[QuestionnaireResponse] = []
    rejects: List[Reject] = []
    answered = set()

    def undecodable(lineno: int, reason: str) -> None:
        rejects.append(Reject(lineno, reason))

    for lineno, line in DatabaseManager().iter_lines(path, undecodable):
        try:
            record = QuestionnaireResponse.from_dict(json.loads(line))
        except json.JSONDecodeError as e:
            rejects.append(Reject(lineno, f"некорректный JSON: {e.msg}"))
            continue
        except (KeyError, ValueError, TypeError) as e:
            rejects.append(Reject(lineno, f"некорректная запись: {e}"))
            continue

        violations = validate(record, schema=schema)
        if violations:
            rejects.append(Reject(lineno, "; ".join(str(v) for v in violations)))
            continue
        key = (record.participant_pseudonym, record.question_id)
        if key in answered:
            rejects.append(Reject(lineno, f"повторный ответ на {record.question_id}"))
            continue
        answered.add(key)
        records.append(record)

    return records, rejects


def _values(records: Sequence[QuestionnaireResponse], question_id: str) -> List[Any]:
    return [r.value for r in records if r.question_id == question_id]


def _require_kind(schema: Optional[QuestionnaireSchema], question_id: str,
                  kind: QuestionKind) -> None:
    question = (schema or default_schema()).by_id(question_id)
    if question is None or question.kind is not kind:
        raise ArgumentError("question_id", f"'{question_id}' не является вопросом {kind.value}")


def likert_counts(values: Sequence[int]) -> Dict[int, int]:
    counts = Counter(values)
    return {v: counts[v] for v in LIKERT_VALUES if counts[v]}


def aggregate_likert(records: Sequence[QuestionnaireResponse], question_id: str,
                     schema: Optional[QuestionnaireSchema] = None
                     ) -> Tuple[Dict[int, int], Optional[Fraction]]:
    """Счётчики 1..5 и точное среднее; без ответов среднее не определено (None)."""
    _require_kind(schema, question_id, QuestionKind.LIKERT5)
    counts = likert_counts(_values(records, question_id))
    total = sum(counts.values())
    if total == 0:
        return counts, None
    return counts, Fraction(sum(v * n for v, n in counts.items()), total)


def _share(counts: Dict[int, int], selected: Sequence[int]) -> Optional[Fraction]:
    total = sum(counts.values())
    if total == 0:
        return None
    return Fraction(sum(counts.get(v, 0) for v in selected), total)


def top_two_fraction(records: Sequence[QuestionnaireResponse], question_id: str,
                     schema: Optional[QuestionnaireSchema] = None) -> Optional[Fraction]:
    counts, _ = aggregate_likert(records, question_id, schema)
    return _share(counts, (4, 5))


def bottom_three_fraction(records: Sequence[QuestionnaireResponse], question_id: str,
                          schema: Optional[QuestionnaireSchema] = None) -> Optional[Fraction]:
    counts, _ = aggregate_likert(records, question_id, schema)
    return _share(counts, (1, 2, 3))


def aggregate_yes_no(records: Sequence[QuestionnaireResponse], question_id: str,
                     schema: Optional[QuestionnaireSchema] = None
                     ) -> Tuple[int, int, Optional[Fraction]]:
    _require_kind(schema, question_id, QuestionKind.YES_NO)
    values = _values(records, question_id)
    yes = sum(1 for v in values if v is True)
    no = len(values) - yes
    return yes, no, (Fraction(yes, len(values)) if values else None)


@dataclass(frozen=True)
class TrustShift:
    before: Dict[int, int]
    after: Dict[int, int]
    at_least_4_after: Optional[Fraction]
    five_before: Optional[Fraction]
    excluded: int = 0

    @property
    def shift(self) -> Dict[int, int]:
        return {v: self.after.get(v, 0) - self.before.get(v, 0) for v in LIKERT_VALUES}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "before": {str(k): n for k, n in sorted(self.before.items())},
            "after": {str(k): n for k, n in sorted(self.after.items())},
            "atLeast4After": format_fraction(self.at_least_4_after),
            "fiveBefore": format_fraction(self.five_before),
            "excluded": self.excluded,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> TrustShift:
        return cls(
            before={int(k): n for k, n in data["before"].items()},
            after={int(k): n for k, n in data["after"].items()},
            at_least_4_after=parse_fraction(data.get("atLeast4After")),
            five_before=parse_fraction(data.get("fiveBefore")),
            excluded=data.get("excluded", 0),
        )


def trust_shift(records: Sequence[QuestionnaireResponse]) -> TrustShift:
    """
    Распределения доверия до и после разговора. Участники без одного
    из двух ответов исключаются и учитываются в excluded.
    """
    before, after = {}, {}
    for r in records:
        if r.question_id == TRUST_BEFORE:
            before[r.participant_pseudonym] = r.value
        elif r.question_id == TRUST_AFTER:
            after[r.participant_pseudonym] = r.value

    both = sorted(set(before) & set(after))
    excluded = len(set(before) ^ set(after))
    before_counts = likert_counts([before[p] for p in both])
    after_counts = likert_counts([after[p] for p in both])
    return TrustShift(
        before=before_counts,
        after=after_counts,
        at_least_4_after=_share(after_counts, (4, 5)),
        five_before=_share(before_counts, (5,)),
        excluded=excluded,
    )


@dataclass(frozen=True)
class BaselineArm:
    question_id: str
    counts: Dict[int, int]
    very_good: Optional[Fraction]
    top_two: Optional[Fraction]


def baseline_comparison(records: Sequence[QuestionnaireResponse],
                        schema: Optional[QuestionnaireSchema] = None) -> List[BaselineArm]:
    """Три конфигурации эксперимента рядом: распределение и доля оценок '5'."""
    arms = []
    for qid in BASELINE_QUESTIONS:
        counts, _ = aggregate_likert(records, qid, schema)
        arms.append(BaselineArm(qid, counts, _share(counts, (5,)), _share(counts, (4, 5))))
    return arms


@dataclass(frozen=True)
class QuestionSummary:
    question_id: str
    section: Section
    kind: QuestionKind
    respondents: int
    missing: int
    counts: Dict[str, int] = field(default_factory=dict)
    mean: Optional[Fraction] = None
    top_two: Optional[Fraction] = None
    yes_fraction: Optional[Fraction] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "questionId": self.question_id,
            "section": self.section.value,
            "kind": self.kind.value,
            "respondents": self.respondents,
            "missing": self.missing,
            "counts": dict(self.counts),
            "mean": format_fraction(self.mean),
            "topTwoFraction": format_fraction(self.top_two),
            "yesFraction": format_fraction(self.yes_fraction),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> QuestionSummary:
        return cls(
            question_id=data["questionId"],
            section=Section(data["section"]),
            kind=QuestionKind(data["kind"]),
            respondents=data["respondents"],
            missing=data["missing"],
            counts=dict(data.get("counts", {})),
            mean=parse_fraction(data.get("mean")),
            top_two=parse_fraction(data.get("topTwoFraction")),
            yes_fraction=parse_fraction(data.get("yesFraction")),
        )


@dataclass(frozen=True)
class AggregateReport:
    participants: int = 0
    questions: Tuple[QuestionSummary, ...] = ()
    trust: Optional[TrustShift] = None

    @property
    def is_empty(self) -> bool:
        return not self.questions and self.trust is None

    def question(self, question_id: str) -> Optional[QuestionSummary]:
        return next((q for q in self.questions if q.question_id == question_id), None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "participants": self.participants,
            "questions": [q.to_dict() for q in self.questions],
            "trustShift": self.trust.to_dict() if self.trust else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> AggregateReport:
        trust = data.get("trustShift")
        return cls(
            participants=data.get("participants", 0),
            questions=tuple(QuestionSummary.from_dict(q) for q in data.get("questions", [])),
            trust=TrustShift.from_dict(trust) if trust else None,
        )


def _summarize(records, section, question, participants) -> QuestionSummary:
    values = _values(records, question.question_id)
    summary = dict(question_id=question.question_id, section=section, kind=question.kind,
                   respondents=len(values), missing=participants - len(values))
    if question.kind is QuestionKind.LIKERT5:
        counts = likert_counts(values)
        total = sum(counts.values())
        return QuestionSummary(
            **summary,
            counts={str(v): n for v, n in counts.items()},
            mean=Fraction(sum(v * n for v, n in counts.items()), total) if total else None,
            top_two=_share(counts, (4, 5)),
        )
    if question.kind is QuestionKind.YES_NO:
        yes = sum(1 for v in values if v is True)
        return QuestionSummary(**summary, counts={"no": len(values) - yes, "yes": yes},
                               yes_fraction=Fraction(yes, len(values)) if values else None)
    return QuestionSummary(**summary)


@log_action("BUILD_REPORT")
def build_report(records: Sequence[QuestionnaireResponse],
                 schema: Optional[QuestionnaireSchema] = None) -> AggregateReport:
    """
    Сводка по всем вопросам схемы, на которые ответил хотя бы один участник.
    missing - участники анкеты без ответа на данный вопрос (без импутации).
    """
    schema = schema or default_schema()
    participants = len({r.participant_pseudonym for r in records})
    answered = {r.question_id for r in records}
    questions = tuple(
        _summarize(records, section, q, participants)
        for section, q in schema.questions() if q.question_id in answered
    )
    has_trust = schema.by_id(TRUST_BEFORE) and schema.by_id(TRUST_AFTER) \
        and answered & {TRUST_BEFORE, TRUST_AFTER}
    return AggregateReport(participants, questions, trust_shift(records) if has_trust else None)
