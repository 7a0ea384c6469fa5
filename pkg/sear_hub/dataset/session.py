"""
Файл AR-сессии: первая строка - заголовок, далее NDJSON-записи с полем
"type": cue, audio_ref (ссылка на внешний PCM-блоб) и token.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from sear_hub.context.audio import AudioFrame, frames_from_samples
from sear_hub.core.codec import dumps, round_floats
from sear_hub.core.exceptions import FormatError
from sear_hub.core.models import CueEvent, TranscriptToken, Utterance
from sear_hub.core.validation import validate
from sear_hub.decorators import log_action
from sear_hub.infra.database import DatabaseManager
from sear_hub.infra.settings import SettingsLoader

SAMPLE_RATES = (8000, 16000, 48000)
PCM_DTYPE = "<f4"
TRANSCRIPT_TRACK = "transcript"
AUDIO_TRACK = "audio"


@dataclass(frozen=True)
class SessionHeader:
    session_id: str
    sample_rate_hz: int = 16000
    frame_size: int = 1024
    participants: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.session_id:
            raise ValueError("sessionId пуст")
        if self.sample_rate_hz not in SAMPLE_RATES:
            raise ValueError(f"sampleRateHz должен быть одним из {SAMPLE_RATES}")
        if self.frame_size <= 0:
            raise ValueError("frameSize должен быть > 0")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "header",
            "sessionId": self.session_id,
            "sampleRateHz": self.sample_rate_hz,
            "frameSize": self.frame_size,
            "participants": list(self.participants),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> SessionHeader:
        if data.get("type", "header") != "header":
            raise ValueError("первая строка должна быть заголовком")
        return cls(
            session_id=data["sessionId"],
            sample_rate_hz=data.get("sampleRateHz", 16000),
            frame_size=data.get("frameSize", 1024),
            participants=tuple(data.get("participants", ())),
        )


@dataclass(frozen=True)
class AudioFrameRef:
    """Отрезок внешнего блоба float32 LE: смещение и число сэмплов."""
    path: str
    offset_samples: int
    sample_count: int
    start_ms: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {"path": self.path, "offsetSamples": self.offset_samples,
                "sampleCount": self.sample_count, "startMs": self.start_ms}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> AudioFrameRef:
        return cls(data["path"], data.get("offsetSamples", 0), data["sampleCount"],
                   data.get("startMs", 0))


SessionRecord = Union[CueEvent, AudioFrameRef, TranscriptToken]

_TAGS = {CueEvent: "cue", AudioFrameRef: "audio_ref", TranscriptToken: "token"}
_TYPES = {tag: cls for cls, tag in _TAGS.items()}


@dataclass(frozen=True)
class SessionLineError:
    line: int
    reason: str

    def __str__(self) -> str:
        return f"строка {self.line}: {self.reason}"


@dataclass(frozen=True)
class ARSessionFile:
    header: SessionHeader
    records: Tuple[SessionRecord, ...] = ()

    @property
    def cues(self) -> List[CueEvent]:
        return [r for r in self.records if isinstance(r, CueEvent)]

    @property
    def tokens(self) -> List[TranscriptToken]:
        return [r for r in self.records if isinstance(r, TranscriptToken)]

    @property
    def audio_refs(self) -> List[AudioFrameRef]:
        return [r for r in self.records if isinstance(r, AudioFrameRef)]


def _track_and_time(record: SessionRecord) -> Tuple[Optional[str], int]:
    if isinstance(record, CueEvent):
        return record.track_id, record.timestamp_ms
    if isinstance(record, TranscriptToken):
        return TRANSCRIPT_TRACK, record.start_ms
    return AUDIO_TRACK, record.start_ms


def _record_violations(record: SessionRecord) -> List[str]:
    if isinstance(record, AudioFrameRef):
        out = []
        if record.offset_samples < 0 or record.sample_count <= 0:
            out.append("offsetSamples ≥ 0 and sampleCount > 0")
        if record.start_ms < 0:
            out.append("startMs ≥ 0")
        return out
    return [str(v) for v in validate(record)]


def record_to_dict(record: SessionRecord) -> Dict[str, Any]:
    return {"type": _TAGS[type(record)], **record.to_dict()}


def record_from_dict(data: Dict[str, Any]) -> SessionRecord:
    tag = data.get("type")
    if tag not in _TYPES:
        raise ValueError(f"неизвестный тип записи '{tag}'")
    body = {k: v for k, v in data.items() if k != "type"}
    return _TYPES[tag].from_dict(body)


@log_action("LOAD_SESSION")
def load_session(path: str | Path) -> Tuple[ARSessionFile, List[SessionLineError]]:
    """
    Разбирает файл сессии. Плохой заголовок - FormatError; ошибки строк тела
    собираются с номерами строк, валидные записи сохраняются.
    Метки времени не убывают в пределах одного trackId.
    """
    errors: List[SessionLineError] = []
    lines = DatabaseManager().iter_lines(
        path, lambda n, reason: errors.append(SessionLineError(n, reason)))
    try:
        lineno, first = next(lines)
    except StopIteration:
        first = None
    if errors:
        bad = errors[0]
        raise FormatError(str(path), f"некорректный заголовок: {bad.reason}", bad.line)
    if first is None:
        raise FormatError(str(path), "нет заголовка сессии")
    try:
        header = SessionHeader.from_dict(json.loads(first))
    except json.JSONDecodeError as e:
        raise FormatError(str(path), f"некорректный заголовок: {e.msg}", lineno)
    except (KeyError, ValueError, TypeError) as e:
        raise FormatError(str(path), f"некорректный заголовок: {e}", lineno)

    records: List[SessionRecord] = []
    last_seen: Dict[Optional[str], int] = {}

    for lineno, line in lines:
        try:
            record = record_from_dict(json.loads(line))
        except json.JSONDecodeError as e:
            errors.append(SessionLineError(lineno, f"некорректный JSON: {e.msg}"))
            continue
        except (KeyError, ValueError, TypeError) as e:
            errors.append(SessionLineError(lineno, str(e)))
            continue

        violations = _record_violations(record)
        track, ts = _track_and_time(record)
        if track in last_seen and ts < last_seen[track]:
            violations.append(f"timestamps non-decreasing per trackId ('{track}')")
        if violations:
            errors.append(SessionLineError(lineno, "; ".join(violations)))
            continue
        last_seen[track] = ts
        records.append(record)

    return ARSessionFile(header, tuple(records)), errors


def write_session(path: str | Path, session: ARSessionFile) -> None:
    DatabaseManager().save_lines(path, [
        dumps(session.header.to_dict()),
        *(dumps(round_floats(record_to_dict(r))) for r in session.records),
    ])


def read_pcm_blob(ref: AudioFrameRef, base_dir: str | Path,
                  sample_rate_hz: Optional[int] = None,
                  frame_size: Optional[int] = None) -> List[AudioFrame]:
    """Читает отрезок блоба float32 LE и режет его на кадры по frame_size сэмплов."""
    settings = SettingsLoader()
    sample_rate_hz = sample_rate_hz or settings.get("SAMPLE_RATE_HZ")
    frame_size = frame_size or settings.get("FRAME_SIZE")
    blob = Path(base_dir) / ref.path
    if not blob.exists():
        raise FileNotFoundError(2, "Файл не найден", str(blob))
    samples = np.fromfile(blob, dtype=PCM_DTYPE, count=ref.sample_count,
                          offset=ref.offset_samples * np.dtype(PCM_DTYPE).itemsize)
    if len(samples) < ref.sample_count:
        raise FormatError(str(blob), f"ожидалось {ref.sample_count} сэмплов, "
                                     f"прочитано {len(samples)}")
    return frames_from_samples(samples, frame_size, sample_rate_hz, ref.start_ms)


def session_frames(session: ARSessionFile, base_dir: str | Path) -> List[AudioFrame]:
    """Все аудиокадры сессии в порядке ссылок."""
    frames: List[AudioFrame] = []
    for ref in session.audio_refs:
        frames.extend(read_pcm_blob(ref, base_dir, session.header.sample_rate_hz,
                                    session.header.frame_size))
    return frames


def write_transcript(path: str | Path, utterances: Sequence[Utterance]) -> None:
    """Транскрипт диалога: одна реплика на строку NDJSON."""
    DatabaseManager().save_lines(path, (dumps(u.to_dict()) for u in utterances))


def load_transcript(path: str | Path) -> List[Utterance]:
    utterances = []
    for lineno, line in DatabaseManager().iter_lines(path):
        try:
            utterances.append(Utterance.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
            raise FormatError(str(path), str(e), lineno)
    return utterances
