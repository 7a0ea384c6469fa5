"""
Цикл рассуждения и взаимодействия: на каждом этапе шаблона агент
генерирует реплику, доставляет её цели, добавляет обе реплики в историю
и подстраивается под реакцию (повтор этапа, веса тем, прерывание).
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from sear_hub.backends.chat import ChatBackend, ChatRequest, ChatTurn
from sear_hub.backends.personas import Target
from sear_hub.core.exceptions import ArgumentError, GenerationError, InteractionError
from sear_hub.core.models import (
    Author,
    ConversationState,
    Fact,
    Outcome,
    SocialProfile,
    StageSpec,
    StrategyTemplate,
    Utterance,
)
from sear_hub.core.utils import mentions, tokenize
from sear_hub.decorators import log_action
from sear_hub.infra.settings import SettingsLoader
from sear_hub.logging_config import logger

EMPTY_MARKER = "<none>"
FACT_PLACEHOLDER = re.compile(r"\{FACT_(\d+)\}")
SYSTEM_PROMPT = ("You write the next line of a casual spoken conversation. "
                 "Reply with one short natural utterance only.")


class Receptiveness(Enum):
    RECEPTIVE = "Receptive"
    NEUTRAL = "Neutral"
    RESISTANT = "Resistant"


@dataclass(frozen=True)
class LoopPolicy:
    max_retries_override: Optional[int] = None
    abort_tokens: Tuple[str, ...] = ("leave me alone", "stop")
    history_window: int = 6
    topic_boost: float = 1.0

    def __post_init__(self):
        if self.max_retries_override is not None and self.max_retries_override < 0:
            raise ArgumentError("max_retries_override", "повторов не может быть меньше 0")

    @classmethod
    def from_settings(cls, max_retries_override: Optional[int] = None) -> LoopPolicy:
        settings = SettingsLoader()
        return cls(
            max_retries_override=max_retries_override,
            abort_tokens=tuple(settings.get("ABORT_TOKENS")),
            history_window=settings.get("HISTORY_WINDOW"),
            topic_boost=settings.get("TOPIC_BOOST"),
        )


@dataclass(frozen=True)
class StageOutcome:
    stage: str
    attempts: int
    last_receptiveness: Optional[Receptiveness]

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "attempts": self.attempts,
            "lastReceptiveness": self.last_receptiveness.value
            if self.last_receptiveness else None,
        }


def classify_receptiveness(response: str, success_cues: Sequence[str] = (),
                           positive: Optional[Sequence[str]] = None,
                           negative: Optional[Sequence[str]] = None) -> Receptiveness:
    """+1 за каждое позитивное слово, -1 за негативное; совпадение successCue - Receptive."""
    settings = SettingsLoader()
    positive = set(positive if positive is not None else settings.get("POSITIVE_TOKENS"))
    negative = set(negative if negative is not None else settings.get("NEGATIVE_TOKENS"))
    if any(mentions(response, cue) for cue in success_cues):
        return Receptiveness.RECEPTIVE
    counts = Counter(tokenize(response))
    score = sum(n for t, n in counts.items() if t in positive) \
        - sum(n for t, n in counts.items() if t in negative)
    if score > 0:
        return Receptiveness.RECEPTIVE
    if score < 0:
        return Receptiveness.RESISTANT
    return Receptiveness.NEUTRAL


def promote_facts(facts: Sequence[Fact], topic_weights: Dict[str, float]) -> List[Fact]:
    """Факты с токенами из усиленных тем поднимаются вверх, остальные сохраняют ранг."""
    def boost(fact: Fact) -> float:
        return sum(topic_weights.get(t, 0.0) for t in set(tokenize(fact.text)))

    indexed = list(enumerate(facts))
    indexed.sort(key=lambda item: (-boost(item[1]), item[0]))
    return [fact for _, fact in indexed]


def format_history(history: Sequence[Utterance], window: int) -> str:
    recent = list(history)[-window:] if window > 0 else []
    if not recent:
        return EMPTY_MARKER
    return "\n".join(f"{u.author.value}: {u.text}" for u in recent)


def fill_prompt(stage: StageSpec, state: ConversationState, profile: SocialProfile,
                history_window: int) -> str:
    facts = promote_facts(profile.facts, state.topic_weights)

    def fact_text(match: re.Match) -> str:
        i = int(match.group(1))
        return facts[i].text if i < len(facts) else EMPTY_MARKER

    text = FACT_PLACEHOLDER.sub(fact_text, stage.prompt_skeleton)
    text = text.replace("{HISTORY}", format_history(state.history, history_window))
    return text.replace("{STAGE_OBJECTIVE}", stage.objective)


def gen_conv(state: ConversationState, profile: SocialProfile, stage: StageSpec,
             backend: ChatBackend, policy: Optional[LoopPolicy] = None) -> str:
    """Заполняет скелет промпта этапа и отправляет его бэкенду."""
    policy = policy or LoopPolicy.from_settings()
    request = ChatRequest(
        turns=(ChatTurn("system", SYSTEM_PROMPT),
               ChatTurn("user", fill_prompt(stage, state, profile, policy.history_window))),
        temperature=0.0,
        max_tokens=SettingsLoader().get("CHAT_MAX_TOKENS"),
    )
    try:
        return backend.complete(request)
    except Exception as e:
        raise GenerationError(stage.name, str(e)) from e


def se_interact(utterance: str, target: Target,
                history: Sequence[Utterance] = ()) -> str:
    """Доставляет реплику цели и возвращает её ответ."""
    return target.respond(utterance, history)


def _boost_topics(weights: Dict[str, float], profile: SocialProfile, response: str,
                  boost: float) -> Dict[str, float]:
    fact_tokens = {t for f in profile.facts for t in tokenize(f.text)}
    updated = dict(weights)
    for token in sorted(set(tokenize(response)) & fact_tokens):
        updated[token] = updated.get(token, 0.0) + boost
    return updated


class ConversationDriver:
    """
    Пошаговый цикл: реплика агента и ответ цели приходят отдельными вызовами.
    Этапы идут строго по порядку, возврата к прошлым этапам нет.
    Resistant - повтор этапа до maxRetries, затем переход дальше.
    """

    def __init__(self, template: StrategyTemplate, profile: SocialProfile,
                 backend: ChatBackend, policy: Optional[LoopPolicy] = None):
        self.template = template
        self.profile = profile
        self.backend = backend
        self.policy = policy or LoopPolicy.from_settings()
        self.state = ConversationState()
        self.outcomes: List[StageOutcome] = []
        self._attempts = 0
        self._turn = 0
        self._pending: Optional[str] = None
        if not template.stages:
            self.state = replace(self.state, outcome=Outcome.COMPLETED)

    @property
    def active(self) -> bool:
        return self.state.outcome is None

    @property
    def stage(self) -> StageSpec:
        return self.template.stages[self.state.current_stage_index]

    @property
    def transcript(self) -> Tuple[Utterance, ...]:
        """История плюс отправленная, но ещё не отвеченная реплика агента."""
        if self._pending is None:
            return self.state.history
        return self.state.history + (
            Utterance(Author.AGENT, self._pending, self.stage.name, self._turn),)

    def _retries(self) -> int:
        if self.policy.max_retries_override is not None:
            return self.policy.max_retries_override
        return self.stage.max_retries

    def next_utterance(self) -> str:
        """Генерирует реплику текущего этапа; повторный вызов без ответа вернёт ту же."""
        if not self.active:
            raise ArgumentError("conversation", "диалог уже завершён")
        if self._pending is None:
            self._attempts += 1
            self._pending = gen_conv(self.state, self.profile, self.stage,
                                     self.backend, self.policy)
        return self._pending

    def receive(self, response: str) -> Receptiveness:
        """Добавляет пару реплик в историю и решает: повтор, переход или конец."""
        if self._pending is None:
            raise ArgumentError("response", "нет реплики агента, на которую можно ответить")
        stage = self.stage
        self.state = replace(self.state, history=self.state.history + (
            Utterance(Author.AGENT, self._pending, stage.name, self._turn),
            Utterance(Author.TARGET, response, stage.name, self._turn + 1),
        ))
        self._turn += 2
        self._pending = None

        if any(mentions(response, token) for token in self.policy.abort_tokens):
            self.outcomes.append(StageOutcome(stage.name, self._attempts,
                                              Receptiveness.RESISTANT))
            self.state = replace(self.state, outcome=Outcome.ABORTED_BY_TARGET)
            logger.info(f"CONVERSATION template_id='{self.template.template_id}' "
                        f"stage='{stage.name}' result=ABORTED_BY_TARGET")
            return Receptiveness.RESISTANT

        verdict = classify_receptiveness(response, stage.success_cues)
        logger.info(f"TURN stage='{stage.name}' attempt={self._attempts} "
                    f"receptiveness='{verdict.value}'")
        if verdict is Receptiveness.RECEPTIVE:
            self.state = replace(self.state, topic_weights=_boost_topics(
                self.state.topic_weights, self.profile, response, self.policy.topic_boost))
        elif verdict is Receptiveness.RESISTANT and self._attempts <= self._retries():
            return verdict

        self.outcomes.append(StageOutcome(stage.name, self._attempts, verdict))
        self._attempts = 0
        next_index = self.state.current_stage_index + 1
        self.state = replace(self.state, current_stage_index=next_index)
        if next_index == len(self.template.stages):
            self.state = replace(self.state, outcome=Outcome.COMPLETED)
        return verdict

    def fail(self, reason: str) -> None:
        """Ошибка бэкенда или канала: Exhausted, история сохраняется без висящей реплики."""
        if not self.active:
            return
        self.outcomes.append(StageOutcome(self.stage.name, self._attempts, None))
        self._pending = None
        self.state = replace(self.state, outcome=Outcome.EXHAUSTED)
        logger.error(f"CONVERSATION template_id='{self.template.template_id}' "
                     f"stage='{self.stage.name}' result=EXHAUSTED message='{reason}'")


@log_action("RUN_CONVERSATION")
def run_conversation(template: StrategyTemplate, profile: SocialProfile, target: Target,
                     backend: ChatBackend, policy: Optional[LoopPolicy] = None,
                     stage_outcomes: Optional[List[StageOutcome]] = None
                     ) -> ConversationState:
    """Полный цикл до завершения, прерывания целью или ошибки (Exhausted)."""
    driver = ConversationDriver(template, profile, backend, policy)
    while driver.active:
        try:
            utterance = driver.next_utterance()
            response = se_interact(utterance, target, driver.state.history)
        except (GenerationError, InteractionError) as e:
            driver.fail(str(e))
            break
        driver.receive(response)

    if stage_outcomes is not None:
        stage_outcomes.extend(driver.outcomes)
    return driver.state
