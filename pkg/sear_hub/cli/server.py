"""
Долгоживущий процесс поверх протокола v1: принимает context_frame,
отвечает обновлённым профилем и, если идёт диалог, следующей репликой агента.
Сообщения обрабатываются строго по одному.
"""
from __future__ import annotations

import socketserver
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO

from sear_hub.agent.reinteract import ConversationDriver, LoopPolicy
from sear_hub.agent.strategies import check_se_strategies
from sear_hub.backends.chat import ChatBackend
from sear_hub.core.exceptions import ArgumentError, GenerationError, ProtocolError
from sear_hub.core.models import Author, RoleRecord, SocialContextFrame, SocialProfile, Utterance
from sear_hub.dataset.session import write_transcript
from sear_hub.dataset.wire import (
    CONTEXT_FRAME,
    CONTROL,
    PROFILE,
    UTTERANCE,
    WireMessage,
    wire_decode,
    wire_encode,
)
from sear_hub.logging_config import logger
from sear_hub.rag.embedder import Embedder
from sear_hub.rag.profiles import adapt_profile, generate_profile
from sear_hub.rag.roles import identify_roles
from sear_hub.rag.vector_store import VectorStore

TRANSCRIPT_FILE = "transcript.ndjson"


class PipelineServer:

    def __init__(self, roles: Sequence[RoleRecord], store: VectorStore, embedder: Embedder,
                 templates: Sequence, backend: ChatBackend, out_dir: str | Path = "out",
                 policy: Optional[LoopPolicy] = None, now_ms: int = 0):
        self.roles: Dict[str, RoleRecord] = {r.role_id: r for r in roles}
        self.store = store
        self.embedder = embedder
        self.templates = list(templates)
        self.backend = backend
        self.out_dir = Path(out_dir)
        self.policy = policy
        self.now_ms = now_ms
        self.profile: Optional[SocialProfile] = None
        self.declared_role: Optional[str] = None
        self.driver: Optional[ConversationDriver] = None
        self.transcript: List[Utterance] = []

    # --- роли и профиль ---------------------------------------------------

    def _role_for(self, frame: SocialContextFrame) -> Optional[str]:
        if self.declared_role:
            return self.declared_role
        matches = identify_roles(self.store, list(self.roles.values()), frame, self.embedder)
        matched = [m.role_id for m in matches.values() if not m.is_unknown]
        if self.profile and self.profile.role_id in matched:
            return self.profile.role_id
        if matched:
            return matched[0]
        if self.profile:
            return self.profile.role_id
        if len(self.roles) == 1:
            return next(iter(self.roles))
        return None

    def _update_profile(self, frame: SocialContextFrame) -> SocialProfile:
        role_id = self._role_for(frame)
        if role_id is None:
            raise ArgumentError("roleId", "роль по кадру не определена")
        profile = self.profile
        if profile is None or profile.role_id != role_id:
            profile = generate_profile(self.roles[role_id], frame.environment, self.now_ms)
        profile = adapt_profile(profile, frame, self.store, self.embedder,
                                self.now_ms, self.roles)
        self.profile = profile
        if self.driver is not None:
            self.driver.profile = profile
        return profile

    # --- диалог -----------------------------------------------------------

    def _finish_conversation(self) -> Optional[str]:
        if self.driver is None:
            return None
        self.transcript.extend(self.driver.transcript)
        outcome = self.driver.state.outcome
        self.driver = None
        return outcome.value if outcome else None

    def _control(self, payload: dict) -> List[WireMessage]:
        command = payload.get("command")
        if command == "role":
            role_id = payload.get("roleId")
            if role_id not in self.roles:
                raise ArgumentError("roleId", f"роль '{role_id}' не найдена")
            self.declared_role = role_id
            return [WireMessage.control("role", roleId=role_id)]
        if command == "start":
            if self.profile is None:
                raise ArgumentError("profile", "сначала нужен context_frame")
            self._finish_conversation()
            templates = self.templates
            if payload.get("templateId"):
                templates = [t for t in templates if t.template_id == payload["templateId"]]
            selected, scores = check_se_strategies(templates, self.profile)
            confidence = next(s.confidence for s in scores
                              if s.template_id == selected.template_id)
            self.driver = ConversationDriver(selected, self.profile, self.backend, self.policy)
            return [WireMessage.control("started", templateId=selected.template_id,
                                        confidence=confidence)]
        if command == "stop":
            return [WireMessage.control("stopped", outcome=self._finish_conversation())]
        raise ArgumentError("command", f"неизвестная команда '{command}'")

    def _next_utterance(self) -> List[WireMessage]:
        driver = self.driver
        if driver is None or not driver.active:
            return []
        try:
            driver.next_utterance()
        except GenerationError as e:
            driver.fail(str(e))
            raise
        return [WireMessage(UTTERANCE, driver.transcript[-1])]

    def _reply(self, utterance: Utterance) -> List[WireMessage]:
        driver = self.driver
        if driver is None or not driver.active:
            raise ArgumentError("utterance", "диалог не идёт")
        if utterance.author is not Author.TARGET:
            raise ArgumentError("author", "ожидается реплика цели (Target)")
        verdict = driver.receive(utterance.text)
        outcome = driver.state.outcome
        reply = WireMessage.control(
            "turn",
            receptiveness=verdict.value,
            stageIndex=driver.state.current_stage_index,
            outcome=outcome.value if outcome else None,
        )
        if outcome is not None:
            self._finish_conversation()
        return [reply]

    # --- протокол ---------------------------------------------------------

    def handle(self, message: WireMessage) -> List[WireMessage]:
        if message.type == CONTEXT_FRAME:
            profile = self._update_profile(message.payload)
            return [WireMessage(PROFILE, profile), *self._next_utterance()]
        if message.type == CONTROL:
            return self._control(message.payload)
        if message.type == UTTERANCE:
            return self._reply(message.payload)
        raise ProtocolError(f"сообщения типа '{message.type}' сервер не принимает")

    def handle_line(self, line: str, lineno: int = 0) -> List[str]:
        """Ошибка в строке не останавливает сервер: в ответ уходит сообщение error."""
        try:
            responses = self.handle(wire_decode(line))
        except Exception as e:
            logger.warning(f"SERVE line={lineno} result=ERROR type={type(e).__name__} "
                           f"message='{e}'")
            responses = [WireMessage.error(str(e), lineno)]
        return [wire_encode(m) for m in responses]

    def flush(self) -> Path:
        """Сохраняет транскрипты всех диалогов, включая незавершённый."""
        self._finish_conversation()
        path = self.out_dir / TRANSCRIPT_FILE
        write_transcript(path, self.transcript)
        logger.info(f"SERVE flush path='{path}' utterances={len(self.transcript)} result=OK")
        return path


def serve_stream(server: PipelineServer, reader: Optional[TextIO] = None,
                 writer: Optional[TextIO] = None) -> int:
    """Читает строки до конца потока; на конце потока сбрасывает транскрипт."""
    reader = reader if reader is not None else sys.stdin
    writer = writer if writer is not None else sys.stdout
    lineno = 0
    for raw in reader:
        lineno += 1
        line = raw.strip()
        if not line:
            continue
        for response in server.handle_line(line, lineno):
            writer.write(response + "\n")
        writer.flush()
    server.flush()
    return 0


def serve_socket(server: PipelineServer, host: str, port: int) -> int:
    """Тот же протокол по локальному TCP: обслуживает одно подключение и завершается."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            reader = (line.decode("utf-8") for line in self.rfile)
            writer = _SocketWriter(self.wfile)
            serve_stream(server, reader, writer)

    with socketserver.TCPServer((host, port), Handler) as tcp:
        logger.info(f"SERVE socket='{host}:{port}' result=LISTENING")
        tcp.handle_request()
    return 0


class _SocketWriter:

    def __init__(self, wfile):
        self._wfile = wfile

    def write(self, text: str) -> None:
        self._wfile.write(text.encode("utf-8"))

    def flush(self) -> None:
        self._wfile.flush()
