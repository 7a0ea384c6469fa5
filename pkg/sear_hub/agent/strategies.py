"""Выбор стратегии по уверенности: доля (по весам) выполненных требований шаблона."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import List, Sequence, Tuple

from sear_hub.core.exceptions import ArgumentError, FormatError
from sear_hub.core.models import (
    FactCategory,
    Predicate,
    PredicateKind,
    SocialProfile,
    StageSpec,
    StrategyTemplate,
)
from sear_hub.core.utils import mentions
from sear_hub.core.validation import validate
from sear_hub.decorators import log_action
from sear_hub.infra.database import DatabaseManager
from sear_hub.logging_config import logger

DEFAULT_TEMPLATE_ID = "opening-engage-win-trust"


@dataclass(frozen=True)
class StrategyScore:
    template_id: str
    confidence: float
    per_predicate: Tuple[Tuple[Predicate, bool], ...] = ()

    def to_dict(self) -> dict:
        return {
            "templateId": self.template_id,
            "confidence": self.confidence,
            "perPredicate": [{"predicate": p.to_dict(), "satisfied": s}
                             for p, s in self.per_predicate],
        }


def predicate_holds(predicate: Predicate, profile: SocialProfile) -> bool:
    if predicate.kind is PredicateKind.TRAIT_EQUALS:
        key, _, value = predicate.argument.partition("=")
        actual = profile.core_identity.get(key.strip())
        return actual is not None and actual.strip().lower() == value.strip().lower()
    if predicate.kind is PredicateKind.HAS_FACT_CATEGORY:
        category = FactCategory(predicate.argument)
        return any(f.category is category for f in profile.facts)
    return any(mentions(f.text, predicate.argument) for f in profile.facts)


def score_template(template: StrategyTemplate, profile: SocialProfile) -> StrategyScore:
    checks = tuple((p, predicate_holds(p, profile)) for p in template.requirements)
    total = sum((Fraction(p.weight) for p, _ in checks), Fraction(0))
    if not checks or total == 0:
        return StrategyScore(template.template_id, 0.0, checks)
    satisfied = sum((Fraction(p.weight) for p, ok in checks if ok), Fraction(0))
    return StrategyScore(template.template_id, float(satisfied / total), checks)


@log_action("CHECK_STRATEGIES")
def check_se_strategies(templates: Sequence[StrategyTemplate], profile: SocialProfile
                        ) -> Tuple[StrategyTemplate, List[StrategyScore]]:
    """
    Оценивает каждый шаблон и выбирает лучший: уверенность,
    затем больший priority, затем templateId по алфавиту.
    """
    if not templates:
        raise ArgumentError("templates", "список шаблонов пуст")
    scores = [score_template(t, profile) for t in templates]
    ranked = sorted(zip(templates, scores),
                    key=lambda ts: (-ts[1].confidence, -ts[0].priority, ts[0].template_id))
    selected, best = ranked[0]
    logger.info(f"STRATEGY_SELECTED template_id='{selected.template_id}' "
                f"confidence={best.confidence:.4f}")
    return selected, scores


def default_template() -> StrategyTemplate:
    """Встроенный трёхэтапный шаблон: знакомство, вовлечение, доверие."""
    return StrategyTemplate(
        template_id=DEFAULT_TEMPLATE_ID,
        priority=2,
        requirements=(
            Predicate(PredicateKind.HAS_FACT_CATEGORY, FactCategory.INTEREST.value, 2.0),
            Predicate(PredicateKind.HAS_FACT_CATEGORY, FactCategory.EVENT.value, 1.0),
        ),
        stages=(
            StageSpec(
                name="Opening",
                objective="Start the conversation with a context-aware icebreaker "
                          "tied to the setting or a recent event.",
                prompt_skeleton="Objective: {STAGE_OBJECTIVE}\n"
                                "Conversation so far:\n{HISTORY}\n"
                                "Known detail to mention casually: {FACT_1}",
                success_cues=("yes", "right", "how did you know"),
                max_retries=1,
            ),
            StageSpec(
                name="Engage",
                objective="Expand the topic into shared interests and hobbies.",
                prompt_skeleton="Objective: {STAGE_OBJECTIVE}\n"
                                "Conversation so far:\n{HISTORY}\n"
                                "Ask an open question about {FACT_0}.",
                success_cues=("love", "play", "favorite"),
                max_retries=1,
            ),
            StageSpec(
                name="Win-Trust",
                objective="Build rapport through empathy and a shared background, then "
                          "close with a future-oriented invitation.",
                prompt_skeleton="Objective: {STAGE_OBJECTIVE}\n"
                                "Conversation so far:\n{HISTORY}\n"
                                "Relate personally to {FACT_0} and suggest meeting again.",
                success_cues=("sure", "sounds good", "let's"),
                max_retries=1,
            ),
        ),
    )


def load_templates(path: str | Path) -> List[StrategyTemplate]:
    """Загружает templates.json; шаблон с нарушенными инвариантами - ошибка формата."""
    try:
        templates = [StrategyTemplate.from_dict(t) for t in DatabaseManager().load(path)]
    except json.JSONDecodeError as e:
        raise FormatError(str(path), e.msg, e.lineno)
    except (KeyError, ValueError, TypeError) as e:
        raise FormatError(str(path), f"некорректный шаблон: {e}")
    for i, template in enumerate(templates):
        violations = validate(template, f"[{i}]")
        if violations:
            raise FormatError(str(path), "; ".join(str(v) for v in violations))
    return templates


def save_templates(path: str | Path, templates: Sequence[StrategyTemplate]) -> None:
    DatabaseManager().save(path, [t.to_dict() for t in templates])
