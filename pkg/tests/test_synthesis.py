import numpy as np
import pytest

from sear_hub.context.audio import AudioFrame, SpeakerCalibration
from sear_hub.context.synthesis import (
    classify_environment,
    estimate_emotion,
    segment_transcript,
    synthesize_context_frame,
)
from sear_hub.core.exceptions import ArgumentError, AttributionError
from sear_hub.core.models import CueEvent, Emotion, Modality, Setting, Speaker, TranscriptToken
from sear_hub.core.validation import validate

RATE = 16000
N = 1024


def tone(freq_hz: float, start_ms: int) -> AudioFrame:
    t = np.arange(N) / RATE
    return AudioFrame(0.5 * np.sin(2 * np.pi * freq_hz * t), RATE, start_ms)


def silence(start_ms: int) -> AudioFrame:
    return AudioFrame(np.zeros(N), RATE, start_ms)


CAL = SpeakerCalibration()


def test_estimate_emotion():
    assert estimate_emotion({}) == Emotion("neutral", 0.0)
    assert estimate_emotion({"expression.smile": 0.9}) == Emotion("happy", 0.9)
    assert estimate_emotion({"expression.smile": 0.4, "expression.frown": 0.7}) == \
        Emotion("displeased", 0.7)


def test_classify_environment():
    assert classify_environment(["sofa", "lamp", "tree"]) is Setting.INDOOR
    assert classify_environment(["tree", "Car"]) is Setting.OUTDOOR
    assert classify_environment(["sofa", "tree"]) is Setting.UNKNOWN
    assert classify_environment(["cup", "person"]) is Setting.UNKNOWN
    assert classify_environment([]) is Setting.UNKNOWN


def test_segments_follow_speaker_changes():
    frames = [tone(500, 0), tone(2000, 64)]
    tokens = [TranscriptToken("hi", 0, 60), TranscriptToken("there", 70, 120)]
    segments = segment_transcript(frames, tokens, CAL)
    assert [(s.speaker, s.text) for s in segments] == [
        (Speaker.PRIMARY, "hi"), (Speaker.OTHER, "there")]


def test_adjacent_tokens_of_one_speaker_merge():
    frames = [tone(2000, 0), tone(2000, 64)]
    tokens = [TranscriptToken("video", 0, 50), TranscriptToken("games", 70, 120)]
    segments = segment_transcript(frames, tokens, CAL)
    assert len(segments) == 1
    assert segments[0].text == "video games"
    assert (segments[0].start_ms, segments[0].end_ms) == (0, 120)


def test_tie_goes_to_primary():
    frames = [tone(500, 0), tone(2000, 64)]
    segments = segment_transcript(frames, [TranscriptToken("mm", 30, 100)], CAL)
    assert segments[0].speaker is Speaker.PRIMARY


def test_silent_token_is_dropped():
    segments = segment_transcript([silence(0)], [TranscriptToken("uh", 0, 40)], CAL)
    assert segments == []


def test_token_without_frames():
    with pytest.raises(AttributionError):
        segment_transcript([tone(500, 0)], [TranscriptToken("late", 500, 600)], CAL)


def test_overlapping_tokens_rejected():
    tokens = [TranscriptToken("a", 0, 50), TranscriptToken("b", 40, 60)]
    with pytest.raises(ArgumentError):
        segment_transcript([tone(500, 0)], tokens, CAL)


def test_empty_window():
    frame = synthesize_context_frame([], [], [], (0, 1000))
    assert frame.face_tracks == ()
    assert frame.transcript == ()
    assert frame.environment.setting is Setting.UNKNOWN
    assert validate(frame) == []


def test_one_track_one_object_one_token():
    events = [
        CueEvent(10, Modality.VISUAL, {"expression.smile": 0.8}, "face-1"),
        CueEvent(20, Modality.ENVIRONMENT, {"object.label": "sofa"}),
    ]
    frame = synthesize_context_frame(events, [tone(500, 0)], [TranscriptToken("hey", 0, 50)],
                                     (0, 1000), CAL)
    assert len(frame.face_tracks) == 1
    assert frame.face_tracks[0].dominant_expression == "smile"
    assert frame.emotion["face-1"] == Emotion("happy", 0.8)
    assert len(frame.transcript) == 1
    assert frame.transcript[0].speaker is Speaker.PRIMARY
    assert frame.environment.setting is Setting.INDOOR
    assert validate(frame) == []


def test_events_outside_window_excluded():
    events = [
        CueEvent(5000, Modality.VISUAL, {"expression.smile": 0.8}, "face-late"),
        CueEvent(6000, Modality.ENVIRONMENT, {"object.label": "tree"}),
    ]
    frame = synthesize_context_frame(events, [], [], (0, 1000))
    assert frame.face_tracks == ()
    assert frame.environment.object_labels == ()


def test_expression_scores_are_averaged_per_track():
    events = [
        CueEvent(0, Modality.VISUAL, {"expression.smile": 0.2, "speaking": True}, "t1"),
        CueEvent(10, Modality.VISUAL, {"expression.smile": 0.6}, "t1"),
    ]
    track = synthesize_context_frame(events, [], [], (0, 100)).face_tracks[0]
    assert track.expression_scores["expression.smile"] == pytest.approx(0.4)
    assert track.speaking_ms == (0,)


def test_synthesis_is_deterministic():
    events = [CueEvent(10, Modality.VISUAL, {"expression.frown": 0.3}, "t1")]
    tokens = [TranscriptToken("hello", 0, 60)]
    first = synthesize_context_frame(events, [tone(2000, 0)], tokens, (0, 500), CAL)
    second = synthesize_context_frame(events, [tone(2000, 0)], tokens, (0, 500), CAL)
    assert first.to_dict() == second.to_dict()


def test_bad_window():
    with pytest.raises(ArgumentError):
        synthesize_context_frame([], [], [], (100, 100))
