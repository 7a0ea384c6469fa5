"""Этап 1: сборка окна социального контекста из аннотаций, аудио и токенов."""
from __future__ import annotations

from collections import Counter, defaultdict
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from sear_hub.context.audio import AudioFrame, SpeakerCalibration, attribute_speaker
from sear_hub.core.exceptions import ArgumentError, AttributionError
from sear_hub.core.models import (
    CueEvent,
    Emotion,
    EnvironmentContext,
    FaceTrack,
    Modality,
    Segment,
    Setting,
    SocialContextFrame,
    Speaker,
    TranscriptToken,
)
from sear_hub.decorators import log_action
from sear_hub.infra.settings import SettingsLoader

EXPRESSION_PREFIX = "expression."
OBJECT_LABEL_KEY = "object.label"
SPEAKING_KEY = "speaking"


def _frames_for(token: TranscriptToken, frames: Sequence[AudioFrame]) -> List[AudioFrame]:
    if token.end_ms > token.start_ms:
        return [f for f in frames if f.overlaps(token.start_ms, token.end_ms)]
    return [f for f in frames if f.start_ms <= token.start_ms < f.end_ms]


def segment_transcript(frames: Sequence[AudioFrame], tokens: Sequence[TranscriptToken],
                       cal: SpeakerCalibration) -> List[Segment]:
    """
    Каждому токену - метка большинства по перекрывающимся кадрам
    (ничья - в пользу Primary), соседние токены одного говорящего сливаются.
    """
    for prev, cur in zip(tokens, tokens[1:]):
        if cur.start_ms < prev.end_ms:
            raise ArgumentError("tokens", f"токены перекрываются или не упорядочены: "
                                          f"'{prev.text}' и '{cur.text}'")

    labelled: List[Tuple[Speaker, TranscriptToken]] = []
    for token in tokens:
        overlapping = _frames_for(token, frames)
        if not overlapping:
            raise AttributionError(token)
        votes = Counter(attribute_speaker(f, cal) for f in overlapping)
        primary, other = votes[Speaker.PRIMARY], votes[Speaker.OTHER]
        if primary == 0 and other == 0:
            continue
        labelled.append((Speaker.PRIMARY if primary >= other else Speaker.OTHER, token))

    segments: List[Segment] = []
    for speaker, token in labelled:
        if segments and segments[-1].speaker is speaker:
            last = segments[-1]
            segments[-1] = Segment(speaker, f"{last.text} {token.text}",
                                   last.start_ms, token.end_ms)
        else:
            segments.append(Segment(speaker, token.text, token.start_ms, token.end_ms))
    return segments


def classify_environment(object_labels: Sequence[str],
                         vocabulary: Optional[Mapping[str, str]] = None) -> Setting:
    """Голосование меток объектов: большинство Indoor/Outdoor, иначе Unknown."""
    vocabulary = vocabulary or SettingsLoader().get("ENVIRONMENT_VOCABULARY")
    votes = Counter()
    for label in object_labels:
        verdict = vocabulary.get(label.strip().lower())
        if verdict in (Setting.INDOOR.value, Setting.OUTDOOR.value):
            votes[verdict] += 1
    indoor, outdoor = votes[Setting.INDOOR.value], votes[Setting.OUTDOOR.value]
    if indoor > outdoor:
        return Setting.INDOOR
    if outdoor > indoor:
        return Setting.OUTDOOR
    return Setting.UNKNOWN


def estimate_emotion(expression_scores: Mapping[str, float],
                     table: Optional[Mapping[str, str]] = None) -> Emotion:
    """Эмоция - метка выражения с максимальной оценкой (по таблице из конфига)."""
    table = table or SettingsLoader().get("EMOTION_TABLE")
    candidates = [(key, score) for key, score in expression_scores.items() if key in table]
    if not candidates:
        return Emotion("neutral", 0.0)
    key, score = min(candidates, key=lambda kv: (-kv[1], kv[0]))
    return Emotion(table[key], float(score))


def _dominant_expression(scores: Mapping[str, float]) -> str:
    if not scores:
        return "neutral"
    key, _ = min(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return key[len(EXPRESSION_PREFIX):] if key.startswith(EXPRESSION_PREFIX) else key


def _face_tracks(events: Sequence[CueEvent]) -> List[FaceTrack]:
    declared = set(SettingsLoader().get("EXPRESSION_KEYS"))
    scores: Dict[str, Dict[str, List[float]]] = defaultdict(lambda: defaultdict(list))
    speaking: Dict[str, List[int]] = defaultdict(list)
    for event in events:
        if event.modality is not Modality.VISUAL:
            continue
        per_track = scores[event.track_id]
        for key, value in event.payload.items():
            if key in declared and isinstance(value, (int, float)) \
                    and not isinstance(value, bool):
                per_track[key].append(float(value))
        if event.payload.get(SPEAKING_KEY):
            speaking[event.track_id].append(event.timestamp_ms)

    tracks = []
    for track_id in sorted(scores):
        means = {k: sum(v) / len(v) for k, v in sorted(scores[track_id].items())}
        tracks.append(FaceTrack(track_id, means, _dominant_expression(means),
                                tuple(sorted(speaking[track_id]))))
    return tracks


@log_action("SYNTHESIZE_FRAME")
def synthesize_context_frame(events: Sequence[CueEvent], frames: Sequence[AudioFrame],
                             tokens: Sequence[TranscriptToken], window: Tuple[int, int],
                             cal: Optional[SpeakerCalibration] = None) -> SocialContextFrame:
    """
    Собирает SocialContextFrame за окно [start, end]: треки лиц с эмоциями,
    атрибутированный транскрипт и тип окружения.
    """
    start, end = window
    if not start < end:
        raise ArgumentError("window", f"нужно start < end, получено [{start}, {end}]")
    cal = cal or SpeakerCalibration.from_settings()

    in_window = [e for e in events if start <= e.timestamp_ms <= end]
    window_tokens = [t for t in tokens if start <= t.start_ms and t.end_ms <= end]
    window_frames = [f for f in frames if f.overlaps(start, end)]

    tracks = _face_tracks(in_window)
    emotion = {t.track_id: estimate_emotion(t.expression_scores) for t in tracks}
    transcript = segment_transcript(window_frames, window_tokens, cal)

    labels = sorted(
        str(e.payload[OBJECT_LABEL_KEY]) for e in in_window
        if e.modality is Modality.ENVIRONMENT and OBJECT_LABEL_KEY in e.payload
    )
    environment = EnvironmentContext(tuple(labels), classify_environment(labels))

    return SocialContextFrame(
        window_start_ms=start,
        window_end_ms=end,
        face_tracks=tuple(tracks),
        transcript=tuple(transcript),
        environment=environment,
        emotion=emotion,
    )
