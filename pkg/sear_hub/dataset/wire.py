"""Протокол v1 между AR-клиентом и сервером: одна JSON-строка {v, type, payload} на сообщение."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Dict, Tuple

from sear_hub.core.codec import dumps
from sear_hub.core.exceptions import ProtocolError
from sear_hub.core.models import SocialContextFrame, SocialProfile, Utterance

VERSION = 1

CONTEXT_FRAME = "context_frame"
TRANSCRIPT = "transcript"
CONTROL = "control"
PROFILE = "profile"
UTTERANCE = "utterance"
ERROR = "error"


@dataclass(frozen=True)
class WireMessage:
    type: str
    payload: Any

    @classmethod
    def control(cls, command: str, **fields) -> WireMessage:
        return cls(CONTROL, {"command": command, **fields})

    @classmethod
    def error(cls, message: str, line: int | None = None) -> WireMessage:
        payload = {"message": message}
        if line is not None:
            payload["line"] = line
        return cls(ERROR, payload)


def _utterances_to_payload(utterances: Tuple[Utterance, ...]) -> Dict[str, Any]:
    return {"utterances": [u.to_dict() for u in utterances]}


def _utterances_from_payload(payload: Dict[str, Any]) -> Tuple[Utterance, ...]:
    return tuple(Utterance.from_dict(u) for u in payload["utterances"])


_CODECS = {
    CONTEXT_FRAME: (lambda f: f.to_dict(), SocialContextFrame.from_dict),
    PROFILE: (lambda p: p.to_dict(), SocialProfile.from_dict),
    UTTERANCE: (lambda u: u.to_dict(), Utterance.from_dict),
    TRANSCRIPT: (_utterances_to_payload, _utterances_from_payload),
    CONTROL: (dict, dict),
    ERROR: (dict, dict),
}


def wire_encode(message: WireMessage) -> str:
    """Одна строка без завершающего перевода строки; переводы строк в тексте экранируются."""
    if message.type not in _CODECS:
        raise ProtocolError(f"неизвестный тип сообщения '{message.type}'")
    to_payload, _ = _CODECS[message.type]
    return dumps({"v": VERSION, "type": message.type, "payload": to_payload(message.payload)})


def wire_decode(line: str) -> WireMessage:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"строка не является JSON: {e.msg}")
    if not isinstance(data, dict):
        raise ProtocolError("ожидается JSON-объект")
    if data.get("v") != VERSION:
        raise ProtocolError(f"неподдерживаемая версия протокола: {data.get('v')!r}")
    kind = data.get("type")
    if kind not in _CODECS:
        raise ProtocolError(f"неизвестный тип сообщения '{kind}'")
    _, from_payload = _CODECS[kind]
    try:
        return WireMessage(kind, from_payload(data["payload"]))
    except (KeyError, ValueError, TypeError) as e:
        raise ProtocolError(f"некорректный payload '{kind}': {e}")
