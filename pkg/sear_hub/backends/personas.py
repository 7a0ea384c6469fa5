"""Симулированные цели: персоны с упорядоченными правилами и интерактивная цель."""
from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple

import prompt

from sear_hub.core.exceptions import ArgumentError, FormatError, InteractionError
from sear_hub.core.models import Utterance
from sear_hub.core.utils import mentions
from sear_hub.infra.database import DatabaseManager

ABORT_PHRASE = "stop"
UTTERANCE_PLACEHOLDER = "{UTTERANCE}"


class ReceptivenessBias(Enum):
    FRIENDLY = "Friendly"
    NEUTRAL = "Neutral"
    HOSTILE = "Hostile"


BIAS_PREFIX = {
    ReceptivenessBias.FRIENDLY: "Sure — ",
    ReceptivenessBias.HOSTILE: "Hmm. ",
    ReceptivenessBias.NEUTRAL: "",
}


@dataclass(frozen=True)
class PersonaRule:
    trigger_keywords: Tuple[str, ...]
    reply_template: str

    def to_dict(self) -> Dict[str, Any]:
        return {"triggerKeywords": list(self.trigger_keywords),
                "replyTemplate": self.reply_template}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> PersonaRule:
        return cls(tuple(data["triggerKeywords"]), data["replyTemplate"])


@dataclass(frozen=True)
class Persona:
    """Порядок правил - часть личности персоны: срабатывает первое подходящее."""
    persona_id: str
    default_reply: str
    rules: Tuple[PersonaRule, ...] = ()
    receptiveness_bias: ReceptivenessBias = ReceptivenessBias.NEUTRAL
    termination_triggers: Tuple[str, ...] = ()
    opening_line: str = ""

    def __post_init__(self):
        if not self.default_reply or not self.default_reply.strip():
            raise ArgumentError("default_reply", "ответ по умолчанию не может быть пустым")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "personaId": self.persona_id,
            "rules": [r.to_dict() for r in self.rules],
            "defaultReply": self.default_reply,
            "receptivenessBias": self.receptiveness_bias.value,
            "terminationTriggers": list(self.termination_triggers),
            "openingLine": self.opening_line,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Persona:
        return cls(
            persona_id=data["personaId"],
            default_reply=data["defaultReply"],
            rules=tuple(PersonaRule.from_dict(r) for r in data.get("rules", [])),
            receptiveness_bias=ReceptivenessBias(data.get("receptivenessBias", "Neutral")),
            termination_triggers=tuple(data.get("terminationTriggers", ())),
            opening_line=data.get("openingLine", ""),
        )

    def introduction(self) -> str:
        """Что персона говорит о себе: openingLine, иначе её заготовленные ответы."""
        if self.opening_line.strip():
            return self.opening_line
        return " ".join([*(r.reply_template for r in self.rules), self.default_reply])


def persona_respond(persona: Persona, utterance: str,
                    conversation_so_far: Sequence[Utterance] = ()) -> str:
    """Чистая функция: триггер завершения -> 'stop', иначе первое правило, иначе ответ по умолчанию."""
    if any(mentions(utterance, trigger) for trigger in persona.termination_triggers):
        return ABORT_PHRASE
    for rule in persona.rules:
        if any(mentions(utterance, kw) for kw in rule.trigger_keywords):
            return rule.reply_template.replace(UTTERANCE_PLACEHOLDER, utterance)
    return BIAS_PREFIX[persona.receptiveness_bias] + persona.default_reply


def load_personas(path: str | Path) -> Dict[str, Persona]:
    """Загружает personas.json (массив персон), порядок сохраняется."""
    try:
        raw = DatabaseManager().load(path)
        personas = [Persona.from_dict(p) for p in raw]
    except json.JSONDecodeError as e:
        raise FormatError(str(path), e.msg, e.lineno)
    except (KeyError, ValueError, TypeError) as e:
        raise FormatError(str(path), f"некорректная персона: {e}")
    return {p.persona_id: p for p in personas}


def save_personas(path: str | Path, personas: Sequence[Persona]) -> None:
    DatabaseManager().save(path, [p.to_dict() for p in personas])


class Target(ABC):
    """Собеседник, которому агент доставляет реплики."""

    name = "target"

    @abstractmethod
    def respond(self, utterance: str, history: Sequence[Utterance]) -> str:
        pass


class PersonaTarget(Target):

    def __init__(self, persona: Persona):
        self.persona = persona
        self.name = persona.persona_id

    def respond(self, utterance: str, history: Sequence[Utterance]) -> str:
        return persona_respond(self.persona, utterance, history)


class ReplTarget(Target):
    """Ответы вводит человек в терминале (simulate --target=repl)."""

    name = "repl"

    def __init__(self, reader=None, writer=print):
        self._reader = reader or (lambda: prompt.string("🎯 Ответ цели > "))
        self._writer = writer
        self.closed = False

    def close(self) -> None:
        self.closed = True

    def respond(self, utterance: str, history: Sequence[Utterance]) -> str:
        if self.closed:
            raise InteractionError(self.name)
        self._writer(f"🤖 Агент: {utterance}")
        try:
            reply = self._reader()
        except (EOFError, KeyboardInterrupt):
            self.closed = True
            raise InteractionError(self.name, "ввод завершён")
        if reply is None:
            self.closed = True
            raise InteractionError(self.name, "ввод завершён")
        return str(reply).strip()

