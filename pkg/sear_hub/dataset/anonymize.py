"""
Псевдонимизация наборов данных (сессия, корпус, ответы анкеты).

Имя заменяется на "P-" + первые 8 hex-символов HMAC-SHA256(key, имя),
поэтому повторный прогон с тем же ключом даёт те же псевдонимы.
Таблица имён не сохраняется, для аудита печатается только дайджест.
"""
from __future__ import annotations

import hashlib
import hmac
import json
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from sear_hub.core.codec import dumps, round_floats
from sear_hub.core.exceptions import ArgumentError, FormatError
from sear_hub.core.models import CueEvent, QuestionnaireResponse, TranscriptToken
from sear_hub.core.utils import normalize_whitespace
from sear_hub.dataset.corpus import SocialCorpusDoc, load_corpus, write_corpus
from sear_hub.dataset.session import ARSessionFile, load_session, write_session
from sear_hub.infra.database import DatabaseManager
from sear_hub.infra.settings import SettingsLoader
from sear_hub.logging_config import logger

PSEUDONYM_PREFIX = "P-"
PSEUDONYM_RE = re.compile(r"P-[0-9a-f]{8}")

Dataset = Union[ARSessionFile, List[SocialCorpusDoc], List[QuestionnaireResponse]]


def _key_bytes(key: Union[str, bytes]) -> bytes:
    if isinstance(key, str):
        key = key.encode("utf-8")
    if not key:
        raise ArgumentError("key", "ключ псевдонимизации пуст")
    return key


def normalize_name(name: str) -> str:
    return normalize_whitespace(name).casefold()


def is_pseudonym(value: str) -> bool:
    return PSEUDONYM_RE.fullmatch(value) is not None


def pseudonym(name: str, key: Union[str, bytes]) -> str:
    digest = hmac.new(_key_bytes(key), normalize_name(name).encode("utf-8"), hashlib.sha256)
    return PSEUDONYM_PREFIX + digest.hexdigest()[:8]


def resolve_key(env_name: Optional[str] = None) -> bytes:
    """Ключ берётся из переменной окружения, имя которой задано в конфиге."""
    env_name = env_name or SettingsLoader().get("ANON_KEY_ENV")
    value = os.getenv(env_name, "")
    if not value:
        raise ArgumentError("key", f"переменная окружения {env_name} не задана")
    return value.encode("utf-8")


class Pseudonymizer:
    """Замена известных имён: поля идентичности целиком, свободный текст - по вхождениям."""

    def __init__(self, key: Union[str, bytes], names: Iterable[str] = ()):
        self.key = _key_bytes(key)
        self.mapping: Dict[str, str] = {}
        self.known: set[str] = set()
        self.issued: set[str] = set()
        self._pattern: Optional[re.Pattern] = None
        for name in names:
            self.add(name)

    def add(self, name: str) -> None:
        name = normalize_whitespace(name)
        if not name:
            return
        if is_pseudonym(name):
            self.known.add(name)
            return
        normalized = normalize_name(name)
        if normalized in self.mapping:
            return
        alias = pseudonym(name, self.key)
        if alias in self.issued:
            raise ArgumentError("names", f"два разных имени получили псевдоним {alias}")
        self.mapping[normalized] = alias
        self.issued.add(alias)
        self._pattern = None

    def aliases(self) -> List[str]:
        """Все псевдонимы набора: выданные сейчас и уже стоявшие в полях идентичности."""
        return sorted(set(self.mapping.values()) | self.known)

    def identity(self, value: str) -> str:
        if not value or is_pseudonym(value):
            return value
        return self.mapping.get(normalize_name(value)) or pseudonym(value, self.key)

    @property
    def pattern(self) -> Optional[re.Pattern]:
        if self._pattern is None and self.mapping:
            # длинные имена раньше коротких, существующие псевдонимы не трогаем
            names = sorted(self.mapping, key=lambda n: (-len(n), n))
            alternatives = "|".join(r"\s+".join(map(re.escape, n.split())) for n in names)
            self._pattern = re.compile(rf"({PSEUDONYM_RE.pattern})|{alternatives}",
                                       re.IGNORECASE)
        return self._pattern

    def text(self, value: str) -> str:
        pattern = self.pattern
        if pattern is None or not value:
            return value

        def substitute(match: re.Match) -> str:
            if match.group(1):
                return match.group(1)
            return self.mapping[normalize_name(match.group(0))]

        return pattern.sub(substitute, value)

    def digest(self) -> str:
        """Ключевой хеш отсортированного списка псевдонимов; повторный прогон его не меняет."""
        table = dumps(self.aliases())
        return hmac.new(self.key, table.encode("utf-8"), hashlib.sha256).hexdigest()


@dataclass(frozen=True)
class AnonymizedDataset:
    dataset: Dataset
    digest: str
    names: int


def _scrub_payload(payload: Dict[str, Any], p: Pseudonymizer,
                   denylist: Sequence[str]) -> Dict[str, Any]:
    return {k: (p.text(v) if isinstance(v, str) else v)
            for k, v in payload.items() if k not in denylist}


def _session(session: ARSessionFile, p: Pseudonymizer, denylist) -> ARSessionFile:
    header = replace(session.header,
                     participants=tuple(p.identity(n) for n in session.header.participants))
    records = []
    for record in session.records:
        if isinstance(record, CueEvent):
            record = replace(record, payload=_scrub_payload(record.payload, p, denylist))
        elif isinstance(record, TranscriptToken):
            record = replace(record, text=p.text(record.text))
        records.append(record)
    return ARSessionFile(header, tuple(records))


def _corpus(docs: Sequence[SocialCorpusDoc], p: Pseudonymizer) -> List[SocialCorpusDoc]:
    return [replace(d, doc_id=p.text(d.doc_id), person_ref=p.identity(d.person_ref),
                    content=p.text(d.content)) for d in docs]


def _responses(records: Sequence[QuestionnaireResponse], p: Pseudonymizer
               ) -> List[QuestionnaireResponse]:
    return [replace(r, participant_pseudonym=p.identity(r.participant_pseudonym),
                    value=p.text(r.value) if isinstance(r.value, str) else r.value)
            for r in records]


def identity_names(dataset: Dataset) -> List[str]:
    """Значения полей идентичности набора данных."""
    if isinstance(dataset, ARSessionFile):
        return list(dataset.header.participants)
    names = []
    for item in dataset:
        if isinstance(item, SocialCorpusDoc):
            names.append(item.person_ref)
        elif isinstance(item, QuestionnaireResponse):
            names.append(item.participant_pseudonym)
    return names


def anonymize(dataset: Dataset, key: Union[str, bytes], names: Iterable[str] = (),
              denylist: Optional[Sequence[str]] = None) -> AnonymizedDataset:
    """
    Псевдонимизирует набор данных. names - дополнительные известные имена
    для свободного текста, к ним добавляются все значения полей идентичности.
    Повторный прогон с тем же ключом ничего не меняет.
    """
    p = Pseudonymizer(key)
    for name in [*names, *identity_names(dataset)]:
        p.add(name)
    denylist = tuple(denylist if denylist is not None
                     else SettingsLoader().get("PAYLOAD_DENYLIST"))

    if isinstance(dataset, ARSessionFile):
        result = _session(dataset, p, denylist)
    elif all(isinstance(d, SocialCorpusDoc) for d in dataset):
        result = _corpus(dataset, p)
    elif all(isinstance(r, QuestionnaireResponse) for r in dataset):
        result = _responses(dataset, p)
    else:
        raise ArgumentError("dataset", "ожидается сессия, корпус или ответы анкеты")

    digest = p.digest()
    names = len(p.aliases())
    logger.info(f"ANONYMIZE names={names} digest='{digest}' result=OK")
    return AnonymizedDataset(result, digest, names)


def _detect_kind(path: Path) -> str:
    for _, line in DatabaseManager().iter_lines(path):
        try:
            first = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(str(path), e.msg, 1)
        if first.get("type") == "header":
            return "session"
        if "docId" in first:
            return "corpus"
        if "participantPseudonym" in first:
            return "responses"
        break
    raise FormatError(str(path), "не удалось определить тип набора данных")


def _load_responses_raw(path: Path) -> List[QuestionnaireResponse]:
    records = []
    for lineno, line in DatabaseManager().iter_lines(path):
        try:
            records.append(QuestionnaireResponse.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
            raise FormatError(str(path), str(e), lineno)
    return records


def anonymize_file(in_path: str | Path, out_path: str | Path, key: Union[str, bytes],
                   names: Iterable[str] = ()) -> AnonymizedDataset:
    """Читает набор данных (тип определяется по первой строке) и пишет псевдонимизированную копию."""
    in_path, out_path = Path(in_path), Path(out_path)
    kind = _detect_kind(in_path)
    if kind == "session":
        session, errors = load_session(in_path)
        if errors:
            raise FormatError(str(in_path), str(errors[0]), errors[0].line)
        result = anonymize(session, key, names)
        write_session(out_path, result.dataset)
    elif kind == "corpus":
        result = anonymize(load_corpus(in_path), key, names)
        write_corpus(out_path, result.dataset)
    else:
        result = anonymize(_load_responses_raw(in_path), key, names)
        DatabaseManager().save_lines(
            out_path, (dumps(round_floats(r.to_dict())) for r in result.dataset))
    return result
