"""Бэкенды генерации текста: сценарный (детерминированный) и HTTP chat-completions."""
from __future__ import annotations

import hashlib
import os
import random
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import requests

from sear_hub.core.exceptions import (
    ArgumentError,
    BackendUnavailableError,
    ChatRequestError,
    ProtocolError,
)
from sear_hub.decorators import log_backend_call
from sear_hub.infra.settings import SettingsLoader
from sear_hub.logging_config import logger

ROLES = ("system", "user", "assistant")
FALLBACK_PREFIX = "ACK:"
FALLBACK_CHARS = 40


@dataclass(frozen=True)
class ChatTurn:
    role: str
    content: str


@dataclass(frozen=True)
class ChatRequest:
    turns: Tuple[ChatTurn, ...]
    temperature: float = 0.0
    max_tokens: int = 256

    def __post_init__(self):
        if not self.turns:
            raise ArgumentError("turns", "нужна хотя бы одна реплика")
        for turn in self.turns:
            if turn.role not in ROLES:
                raise ArgumentError("role", f"'{turn.role}' не из {ROLES}")
        if self.temperature < 0:
            raise ArgumentError("temperature", "должна быть ≥ 0")
        if self.max_tokens <= 0:
            raise ArgumentError("max_tokens", "должно быть > 0")

    @property
    def last_user_turn(self) -> str:
        for turn in reversed(self.turns):
            if turn.role == "user":
                return turn.content
        return ""

    def to_payload(self, model: str) -> Dict:
        return {
            "model": model,
            "messages": [{"role": t.role, "content": t.content} for t in self.turns],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }


def prompt_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class ChatBackend(ABC):
    """Генерирует ответ ассистента на запрос."""

    name = "backend"

    @abstractmethod
    def complete(self, request: ChatRequest) -> str:
        pass


def scripted_respond(request: ChatRequest, script: Mapping[str, str]) -> str:
    """Ответ по хешу последней реплики user, иначе 'ACK:' + первые 40 символов."""
    last = request.last_user_turn
    reply = script.get(prompt_hash(last))
    if reply is not None:
        return reply
    return FALLBACK_PREFIX + last[:FALLBACK_CHARS]


class ScriptedBackend(ChatBackend):
    """Детерминированный бэкенд для тестов и симуляций. Запоминает промпты."""

    name = "scripted"

    def __init__(self, script: Optional[Mapping[str, str]] = None):
        self.script = dict(script or {})
        self.prompts: List[str] = []

    @classmethod
    def from_prompts(cls, replies: Mapping[str, str]) -> ScriptedBackend:
        """Сценарий в виде {текст промпта: ответ}."""
        return cls({prompt_hash(p): r for p, r in replies.items()})

    def complete(self, request: ChatRequest) -> str:
        self.prompts.append(request.last_user_turn)
        return scripted_respond(request, self.script)


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    api_key_ref: str
    model: str
    timeout_ms: int = 30000
    max_attempts: int = 3
    backoff_base_ms: int = 250

    def __post_init__(self):
        if not self.base_url:
            raise ArgumentError("base_url", "адрес не задан")
        if self.timeout_ms <= 0:
            raise ArgumentError("timeout_ms", "должен быть > 0")
        if self.max_attempts < 1:
            raise ArgumentError("max_attempts", "нужна хотя бы одна попытка")

    @classmethod
    def from_settings(cls) -> EndpointConfig:
        settings = SettingsLoader()
        return cls(
            base_url=settings.get("CHAT_BASE_URL"),
            api_key_ref=settings.get("CHAT_API_KEY_ENV"),
            model=settings.get("CHAT_MODEL"),
            timeout_ms=settings.get("CHAT_TIMEOUT_MS"),
            max_attempts=settings.get("CHAT_MAX_ATTEMPTS"),
            backoff_base_ms=settings.get("CHAT_BACKOFF_BASE_MS"),
        )


@dataclass
class HttpChatClient(ChatBackend):
    """
    Клиент chat-completions: POST {base_url}/chat/completions.
    Повторы на таймаут и 5xx с экспоненциальной задержкой (±20% джиттер).
    """

    config: EndpointConfig
    sleep: Callable[[float], None] = time.sleep
    rng: random.Random = field(default_factory=lambda: random.Random(0))
    session: requests.Session = field(default_factory=requests.Session)

    name = "http"

    def backoff_seconds(self, retry: int) -> float:
        base = self.config.backoff_base_ms * (2 ** (retry - 1)) / 1000.0
        return base * self.rng.uniform(0.8, 1.2)

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.getenv(self.config.api_key_ref) if self.config.api_key_ref else None
        if token:
            headers["Authorization"] = f"Bearer {token}"
        else:
            logger.warning(f"[http] Переменная {self.config.api_key_ref} не задана, "
                           f"запрос без авторизации")
        return headers

    @staticmethod
    def _parse(response: requests.Response) -> str:
        try:
            data = response.json()
        except ValueError:
            raise ProtocolError("ответ не является JSON")
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise ProtocolError("нет поля choices[0].message.content")
        if not isinstance(content, str):
            raise ProtocolError("content не является строкой")
        return content

    @log_backend_call("ChatCompletions")
    def complete(self, request: ChatRequest) -> str:
        url = f"{self.config.base_url.rstrip('/')}/chat/completions"
        payload = request.to_payload(self.config.model)
        timeout = self.config.timeout_ms / 1000.0
        last_reason = ""

        for attempt in range(1, self.config.max_attempts + 1):
            if attempt > 1:
                self.sleep(self.backoff_seconds(attempt - 1))
            try:
                response = self.session.post(url, json=payload, headers=self._headers(),
                                             timeout=timeout)
            except requests.exceptions.Timeout:
                last_reason = "превышено время ожидания ответа"
                logger.warning(f"[http] Попытка {attempt}: {last_reason}")
                continue
            except requests.exceptions.ConnectionError:
                last_reason = "ошибка соединения"
                logger.warning(f"[http] Попытка {attempt}: {last_reason}")
                continue
            except requests.exceptions.RequestException as e:
                raise ChatRequestError(0, f"сбой при запросе: {e}")

            status = response.status_code
            if status >= 500:
                last_reason = f"сервер ответил {status}"
                logger.warning(f"[http] Попытка {attempt}: {last_reason}")
                continue
            if status >= 400:
                raise ChatRequestError(status, response.reason or "ошибка клиента")
            return self._parse(response)

        raise BackendUnavailableError(self.config.max_attempts, last_reason)


def http_chat_complete(config: EndpointConfig, request: ChatRequest) -> str:
    return HttpChatClient(config).complete(request)
