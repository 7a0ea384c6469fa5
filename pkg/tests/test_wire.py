import json

import pytest

from sear_hub.core.exceptions import ProtocolError
from sear_hub.core.models import (
    Author,
    FaceTrack,
    Segment,
    SocialContextFrame,
    Speaker,
    Utterance,
)
from sear_hub.dataset.wire import (
    CONTEXT_FRAME,
    TRANSCRIPT,
    UTTERANCE,
    WireMessage,
    wire_decode,
    wire_encode,
)


def test_frame_message_round_trip():
    frame = SocialContextFrame(0, 1000, (FaceTrack("t1", {"expression.smile": 0.9},
                                                   "expression.smile"),),
                               (Segment(Speaker.OTHER, "hi", 0, 200),))
    line = wire_encode(WireMessage(CONTEXT_FRAME, frame))
    assert json.loads(line)["v"] == 1
    assert wire_decode(line) == WireMessage(CONTEXT_FRAME, frame)


def test_newlines_stay_on_one_line():
    utterance = Utterance(Author.AGENT, "line one\nline two", "Engage", 2)
    line = wire_encode(WireMessage(UTTERANCE, utterance))
    assert "\n" not in line
    assert wire_decode(line).payload.text == "line one\nline two"


def test_transcript_and_control():
    transcript = (Utterance(Author.AGENT, "hi", "Opening", 0),
                  Utterance(Author.TARGET, "hey", "Opening", 1))
    assert wire_decode(wire_encode(WireMessage(TRANSCRIPT, transcript))).payload == transcript
    control = WireMessage.control("start", templateId="opening-engage-win-trust")
    assert wire_decode(wire_encode(control)) == control
    error = WireMessage.error("bad line", line=3)
    assert wire_decode(wire_encode(error)).payload == {"message": "bad line", "line": 3}


@pytest.mark.parametrize("line", [
    '{"v": 2, "type": "control", "payload": {}}',
    '{"type": "control", "payload": {}}',
    '{"v": 1, "type": "telemetry", "payload": {}}',
    '{"v": 1, "type": "utterance", "payload": {"text": "no author"}}',
    '[1, 2, 3]',
    'not json',
])
def test_rejected_lines(line):
    with pytest.raises(ProtocolError):
        wire_decode(line)


def test_unknown_type_cannot_be_encoded():
    with pytest.raises(ProtocolError):
        wire_encode(WireMessage("telemetry", {}))
